/* Runtime decisions for decision-managed loops.
 *
 * Keeps one profile record per loop site in a process-global registry and
 * answers preomp_decide with the same observable state machine as the
 * Python reference decider: a stateless heuristic, an accurate profiler
 * that counts the work executed beneath each run, and a relaxed profiler
 * that validates its work measure (the loop's own trip count) at decision
 * time instead.
 *
 * Concurrency: generated code calls preomp_decide/preomp_enter/preomp_exit
 * back to back on whichever thread reaches the loop, including threads of
 * a team spawned by an enclosing managed loop.  Per-loop state transitions
 * are serialised by a per-loop lock; nesting depth lives in thread-local
 * storage; the registry only ever grows, so lookups run lock-free.  Only
 * one managed loop at a time can be running its parallel copy (decisions
 * nested inside one always come out serial), which is what makes the
 * cross-thread work counting below tractable.
 */

#include "preomp_rt.h"

#include <omp.h>
#include <pthread.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

typedef enum { KIND_HEURISTIC, KIND_PROFILING, KIND_RELAXED } kind_t;
typedef enum { PH_UNPROFILED, PH_SERIAL_TIMED, PH_BOTH_TIMED } phase_t;
typedef enum {
    DEC_SERIAL,
    DEC_PARALLEL,
    DEC_SERIAL_PROFILED,
    DEC_PARALLEL_PROFILED
} decision_t;

static const char *const phase_names[] = {"unprofiled", "serial_timed", "both_timed"};
static const char *const decision_names[] = {
    "serial", "parallel", "serial_profiled", "parallel_profiled"};

/* Reasons form a closed vocabulary shared with the reference decider; they
 * are only ever referenced through these pointers, so identity compares. */
static const char *const R_OUTER_ACTIVE = "outer_active";
static const char *const R_NO_ITERATIONS = "no_iterations";
static const char *const R_THRESHOLD_PASS = "threshold_pass";
static const char *const R_THRESHOLD_FAIL = "threshold_fail";
static const char *const R_PROFILE_SERIAL = "profile_serial";
static const char *const R_PROFILE_PARALLEL = "profile_parallel";
static const char *const R_STEADY_STATE = "steady_state";

#define WORK_UNSET (-1L)

typedef struct loop_state {
    int id;
    phase_t phase;
    long work_measure; /* WORK_UNSET until a profiled serial run stores it */
    double serial_time;
    double parallel_time;
    long invalidations;
    long invocations;
    /* Work-count window for the accurate profiler while this loop runs its
     * parallel copy: team threads report the iterations they saw here,
     * because their own frame stacks do not reach across the region. */
    int par_live;
    int par_saw_nested;
    long par_units;
    omp_lock_t lock;
    struct loop_state *next;
} loop_state;

static loop_state *registry; /* grows forward only; heads are published with
                                release order so lock-free walks see whole nodes */
static pthread_mutex_t registry_mu = PTHREAD_MUTEX_INITIALIZER;
static pthread_mutex_t trace_mu = PTHREAD_MUTEX_INITIALIZER;
static pthread_once_t cfg_once = PTHREAD_ONCE_INIT;

static struct {
    kind_t kind;
    int threshold_set;
    double threshold;
    FILE *trace;
    int debug;
} cfg;

enum { MAX_NEST = 64 };

typedef struct {
    int id;
    int parallel;     /* this entry bumped the parallel depth */
    int profiled;     /* the decision opened a timing window */
    decision_t decision;
    long iters;       /* trip count from the matching decide call */
    double started;
    long child_units; /* accurate kind: units reported by nested managed loops */
    int saw_nested;   /* accurate kind: a managed loop ran beneath this one */
} nest_frame;

static _Thread_local struct {
    int depth;
    int parallel_depth;
    int live_frames;
    int dropped; /* entries beyond MAX_NEST, tracked so exits stay paired */
    int pending_valid;
    int pending_id;
    decision_t pending_decision;
    long pending_iters;
    nest_frame frames[MAX_NEST];
} tls;

static void cfg_init(void)
{
    const char *s = getenv("PREOMP_DECIDER");
    cfg.kind = KIND_HEURISTIC;
    if (s && *s) {
        if (strcmp(s, "heuristic") == 0)
            cfg.kind = KIND_HEURISTIC;
        else if (strcmp(s, "profiling") == 0)
            cfg.kind = KIND_PROFILING;
        else if (strcmp(s, "relaxed_profiling") == 0)
            cfg.kind = KIND_RELAXED;
        else
            fprintf(stderr, "preomp_rt: unknown PREOMP_DECIDER '%s', using heuristic\n", s);
    }
    s = getenv("PREOMP_THRESHOLD");
    if (s && *s) {
        char *end = NULL;
        double v = strtod(s, &end);
        if (end != s && *end == '\0') {
            cfg.threshold = v;
            cfg.threshold_set = 1;
        } else {
            fprintf(stderr, "preomp_rt: ignoring unparseable PREOMP_THRESHOLD '%s'\n", s);
        }
    }
    s = getenv("PREOMP_TRACE");
    if (s && *s) {
        cfg.trace = fopen(s, "w");
        if (!cfg.trace)
            fprintf(stderr, "preomp_rt: cannot open trace file '%s'\n", s);
    }
    cfg.debug = getenv("PREOMP_DEBUG") != NULL;
}

static loop_state *state_for(int id)
{
    loop_state *st = __atomic_load_n(&registry, __ATOMIC_ACQUIRE);
    for (; st; st = st->next)
        if (st->id == id)
            return st;
    pthread_mutex_lock(&registry_mu);
    for (st = registry; st; st = st->next)
        if (st->id == id)
            break;
    if (!st) {
        st = calloc(1, sizeof *st);
        if (!st) {
            fprintf(stderr, "preomp_rt: out of memory\n");
            abort();
        }
        st->id = id;
        st->phase = PH_UNPROFILED;
        st->work_measure = WORK_UNSET;
        omp_init_lock(&st->lock);
        st->next = registry;
        __atomic_store_n(&registry, st, __ATOMIC_RELEASE);
    }
    pthread_mutex_unlock(&registry_mu);
    return st;
}

static long trip_count(long init, long bound, long step)
{
    long distance;
    if (step <= 0)
        return 0;
    distance = bound - init;
    if (distance <= 0)
        return 0;
    return (distance + step - 1) / step;
}

static void state_invalidate(loop_state *st)
{
    st->phase = PH_UNPROFILED;
    st->work_measure = WORK_UNSET;
    st->serial_time = 0.0;
    st->parallel_time = 0.0;
    st->invalidations++;
}

static decision_t decide_heuristic(long iters, int threads, double threshold,
                                   int outer_active, const char **reason)
{
    if (outer_active) {
        *reason = R_OUTER_ACTIVE;
        return DEC_SERIAL;
    }
    if (iters <= 0) {
        *reason = R_NO_ITERATIONS;
        return DEC_SERIAL;
    }
    if ((double)iters / (double)threads >= threshold) {
        *reason = R_THRESHOLD_PASS;
        return DEC_PARALLEL;
    }
    *reason = R_THRESHOLD_FAIL;
    return DEC_SERIAL;
}

/* Caller holds st->lock. */
static decision_t decide_profiling(loop_state *st, long iters, int threads,
                                   double threshold, int outer_active, int relaxed,
                                   const char **reason)
{
    decision_t quick = decide_heuristic(iters, threads, threshold, outer_active, reason);
    if (quick == DEC_PARALLEL || *reason != R_THRESHOLD_FAIL)
        return quick;
    if (relaxed && st->phase != PH_UNPROFILED && iters != st->work_measure)
        state_invalidate(st);
    if (st->phase == PH_UNPROFILED) {
        if (relaxed)
            st->work_measure = iters;
        *reason = R_PROFILE_SERIAL;
        return DEC_SERIAL_PROFILED;
    }
    if (st->phase == PH_SERIAL_TIMED) {
        *reason = R_PROFILE_PARALLEL;
        return DEC_PARALLEL_PROFILED;
    }
    *reason = R_STEADY_STATE;
    return st->parallel_time < st->serial_time ? DEC_PARALLEL : DEC_SERIAL;
}

/* Feed one finished run back into the loop's profile; caller holds st->lock.
 * The accurate kind reports every run and discards the profile when the
 * work measure moved; the relaxed kind validated its measure at decision
 * time, so only profiled runs get here. */
static void state_record(loop_state *st, decision_t decision, double elapsed, long work)
{
    if (cfg.kind == KIND_HEURISTIC)
        return;
    if (cfg.kind == KIND_PROFILING) {
        if (st->work_measure != WORK_UNSET && work != st->work_measure) {
            state_invalidate(st);
            return;
        }
    }
    if (decision == DEC_SERIAL_PROFILED) {
        st->serial_time = elapsed;
        st->work_measure = work;
        st->phase = PH_SERIAL_TIMED;
    } else if (decision == DEC_PARALLEL_PROFILED) {
        st->parallel_time = elapsed;
        st->phase = PH_BOTH_TIMED;
    }
}

/* A managed loop is starting on a thread with no frames of its own: it must
 * be inside the (single possible) parallel copy currently running, so mark
 * that window as no longer innermost. */
static void mark_enclosing_parallel_run(void)
{
    loop_state *st = __atomic_load_n(&registry, __ATOMIC_ACQUIRE);
    for (; st; st = st->next) {
        if (!st->par_live)
            continue;
        omp_set_lock(&st->lock);
        if (st->par_live)
            st->par_saw_nested = 1;
        omp_unset_lock(&st->lock);
    }
}

static void report_to_enclosing_parallel_run(long units)
{
    loop_state *st = __atomic_load_n(&registry, __ATOMIC_ACQUIRE);
    for (; st; st = st->next) {
        if (!st->par_live)
            continue;
        omp_set_lock(&st->lock);
        if (st->par_live)
            st->par_units += units;
        omp_unset_lock(&st->lock);
    }
}

int preomp_decide(int id, long init, long bound, long step, double threshold)
{
    loop_state *st;
    long iters, invocation;
    int threads, outer_active;
    decision_t decision;
    const char *reason;
    const char *phase;

    pthread_once(&cfg_once, cfg_init);
    st = state_for(id);
    iters = trip_count(init, bound, step);
    threads = omp_get_max_threads();
    outer_active = omp_in_parallel() || tls.parallel_depth > 0;
    if (cfg.threshold_set)
        threshold = cfg.threshold;

    omp_set_lock(&st->lock);
    invocation = st->invocations++;
    if (cfg.kind == KIND_HEURISTIC) {
        phase = "none";
        decision = decide_heuristic(iters, threads, threshold, outer_active, &reason);
    } else {
        phase = phase_names[st->phase];
        decision = decide_profiling(st, iters, threads, threshold, outer_active,
                                    cfg.kind == KIND_RELAXED, &reason);
    }
    omp_unset_lock(&st->lock);

    if (cfg.trace) {
        pthread_mutex_lock(&trace_mu);
        fprintf(cfg.trace, "%d,%ld,%ld,%d,%d,%s,%s,%s\n", id, invocation, iters,
                threads, outer_active ? 1 : 0, phase, decision_names[decision], reason);
        fflush(cfg.trace);
        pthread_mutex_unlock(&trace_mu);
    }

    tls.pending_valid = 1;
    tls.pending_id = id;
    tls.pending_decision = decision;
    tls.pending_iters = iters;
    return decision == DEC_PARALLEL || decision == DEC_PARALLEL_PROFILED;
}

void preomp_enter(int id)
{
    nest_frame f;

    pthread_once(&cfg_once, cfg_init);
    memset(&f, 0, sizeof f);
    f.id = id;
    f.decision = DEC_SERIAL;
    if (tls.pending_valid && tls.pending_id == id) {
        f.decision = tls.pending_decision;
        f.parallel = f.decision == DEC_PARALLEL || f.decision == DEC_PARALLEL_PROFILED;
        f.profiled = f.decision == DEC_SERIAL_PROFILED || f.decision == DEC_PARALLEL_PROFILED;
        f.iters = tls.pending_iters;
    } else if (cfg.debug) {
        fprintf(stderr, "preomp_rt: enter(%d) without a matching decision\n", id);
        abort();
    }
    tls.pending_valid = 0;

    if (cfg.kind == KIND_PROFILING) {
        if (tls.live_frames > 0)
            tls.frames[tls.live_frames - 1].saw_nested = 1;
        else
            mark_enclosing_parallel_run();
        if (f.parallel) {
            /* open the shared work-count window before the team exists */
            loop_state *st = state_for(id);
            omp_set_lock(&st->lock);
            st->par_live = 1;
            st->par_saw_nested = 0;
            st->par_units = 0;
            omp_unset_lock(&st->lock);
        }
    }
    if (f.profiled)
        f.started = omp_get_wtime();

    tls.depth++;
    if (tls.live_frames < MAX_NEST) {
        if (f.parallel)
            tls.parallel_depth++;
        tls.frames[tls.live_frames++] = f;
    } else {
        /* absurd nesting depth; keep enter/exit paired, treat as serial */
        if (cfg.debug) {
            fprintf(stderr, "preomp_rt: managed loops nested deeper than %d\n", MAX_NEST);
            abort();
        }
        tls.dropped++;
    }
}

void preomp_exit(int id)
{
    nest_frame f;
    loop_state *st;
    double elapsed;
    long units;
    int saw;

    pthread_once(&cfg_once, cfg_init);
    if (tls.dropped > 0) {
        tls.dropped--;
        tls.depth--;
        return;
    }
    if (tls.live_frames == 0) {
        if (cfg.debug) {
            fprintf(stderr, "preomp_rt: exit(%d) without a matching enter\n", id);
            abort();
        }
        return;
    }
    f = tls.frames[--tls.live_frames];
    if (cfg.debug && f.id != id) {
        fprintf(stderr, "preomp_rt: mismatched exit: expected %d, got %d\n", f.id, id);
        abort();
    }
    tls.depth--;
    if (f.parallel)
        tls.parallel_depth--;

    if (cfg.kind == KIND_HEURISTIC)
        return;

    elapsed = f.profiled ? omp_get_wtime() - f.started : 0.0;
    st = state_for(id);

    if (cfg.kind == KIND_RELAXED) {
        /* inner levels stay cheap: nothing but the depth bookkeeping above */
        if (f.profiled) {
            omp_set_lock(&st->lock);
            state_record(st, f.decision, elapsed, f.iters);
            omp_unset_lock(&st->lock);
        }
        return;
    }

    /* accurate kind: close this run's work count and report it upward */
    omp_set_lock(&st->lock);
    saw = f.saw_nested || (f.parallel && st->par_saw_nested);
    units = saw ? f.child_units + (f.parallel ? st->par_units : 0) : f.iters;
    if (f.parallel)
        st->par_live = 0;
    state_record(st, f.decision, elapsed, units);
    omp_unset_lock(&st->lock);

    if (tls.live_frames > 0)
        tls.frames[tls.live_frames - 1].child_units += units;
    else
        report_to_enclosing_parallel_run(units);
}
