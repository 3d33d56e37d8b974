/* Scripted exercises of the runtime's decision state machine.  Each mode
 * runs in its own process because the decider kind is frozen at first use;
 * the Makefile's check target drives all of them:
 *
 *   ./selftest heuristic                            (no PREOMP_* set)
 *   PREOMP_DECIDER=relaxed_profiling ./selftest relaxed
 *   PREOMP_DECIDER=profiling        ./selftest profiling
 *   PREOMP_THRESHOLD=4.0            ./selftest threshold
 *
 * Runs are simulated by sleeping inside the enter/exit window, so the
 * profiled timings order the way the script intends regardless of load. */

#include <omp.h>
#include <stdio.h>
#include <string.h>
#include <time.h>

#include "preomp_rt.h"

static int failures;

static void check(int cond, const char *what)
{
    printf("%s %s\n", cond ? "ok  " : "FAIL", what);
    if (!cond)
        failures++;
}

static void sleep_ms(long ms)
{
    struct timespec ts;
    ts.tv_sec = ms / 1000;
    ts.tv_nsec = (ms % 1000) * 1000000;
    nanosleep(&ts, NULL);
}

/* One bracketed run that pretends to take the given time. */
static void run(int id, long ms)
{
    preomp_enter(id);
    sleep_ms(ms);
    preomp_exit(id);
}

static void test_heuristic(void)
{
    check(preomp_decide(0, 0, 16, 1, 1.0) == 1, "16 iterations on 8 threads pass");
    run(0, 0);
    check(preomp_decide(1, 0, 8, 1, 1.0) == 1, "ratio exactly at threshold passes");
    run(1, 0);
    check(preomp_decide(2, 0, 0, 1, 1.0) == 0, "empty range is serial");
    run(2, 0);
    check(preomp_decide(3, 5, 5, 1, 1.0) == 0, "degenerate bounds are serial");
    run(3, 0);
    check(preomp_decide(4, 0, 7, 2, 1.0) == 0, "strided count of 4 fails on 8 threads");
    run(4, 0);
    check(preomp_decide(4, 0, 7, 2, 0.5) == 1, "same count passes a lower threshold");
    run(4, 0);
    check(preomp_decide(5, 0, 9, 0, 1.0) == 0, "nonpositive step counts as no iterations");
    run(5, 0);

    /* nesting is tracked through the runtime's own depth counter even with
     * no real parallel region anywhere in sight */
    check(preomp_decide(6, 0, 64, 1, 1.0) == 1, "outer loop goes parallel");
    preomp_enter(6);
    check(preomp_decide(7, 0, 64, 1, 1.0) == 0, "nested decision is forced serial");
    run(7, 0);
    preomp_exit(6);
    check(preomp_decide(7, 0, 64, 1, 1.0) == 1, "same loop passes once back at top level");
    run(7, 0);
}

static void test_relaxed(void)
{
    /* 8 iterations on 8 threads with threshold 2.0 keeps the heuristic
     * refusing, which is what hands control to the profiling path */
    check(preomp_decide(0, 0, 8, 1, 2.0) == 0, "first sight runs the serial probe");
    run(0, 4);
    check(preomp_decide(0, 0, 8, 1, 2.0) == 1, "second sight runs the parallel probe");
    run(0, 2);
    check(preomp_decide(0, 0, 8, 1, 2.0) == 1, "faster parallel probe wins steady state");
    run(0, 2);

    /* trip count change invalidates at decision time, full cycle restarts */
    check(preomp_decide(0, 0, 12, 1, 2.0) == 0, "new trip count reprofiles immediately");
    run(0, 5);
    check(preomp_decide(0, 0, 12, 1, 2.0) == 1, "parallel probe after invalidation");
    run(0, 9);
    check(preomp_decide(0, 0, 12, 1, 2.0) == 0, "slower parallel probe loses steady state");
    run(0, 0);

    /* heuristic short-circuits leave the profile untouched */
    check(preomp_decide(0, 0, 64, 1, 2.0) == 1, "wide run passes the heuristic outright");
    run(0, 0);
    check(preomp_decide(0, 0, 12, 1, 2.0) == 0, "profile for 12 iterations survived it");
    run(0, 0);
}

static void test_profiling(void)
{
    /* outer loop of 4 with a nested loop of 16; the work measure is the
     * nested iteration count, so the nested extent is what invalidates */
    check(preomp_decide(10, 0, 4, 1, 2.0) == 0, "outer serial probe");
    preomp_enter(10);
    check(preomp_decide(11, 0, 16, 1, 2.0) == 1, "inner passes heuristic during probe");
    run(11, 3);
    preomp_exit(10);

    check(preomp_decide(10, 0, 4, 1, 2.0) == 1, "outer parallel probe");
    preomp_enter(10);
    check(preomp_decide(11, 0, 16, 1, 2.0) == 0, "inner forced serial inside parallel run");
    run(11, 1);
    preomp_exit(10);

    check(preomp_decide(10, 0, 4, 1, 2.0) == 1, "faster parallel probe wins steady state");
    preomp_enter(10);
    check(preomp_decide(11, 0, 16, 1, 2.0) == 0, "inner still serial in steady state");
    run(11, 1);
    preomp_exit(10);

    /* shrink the nested loop: the stale profile still answers this call,
     * the mismatch only surfaces when the run's work count comes back */
    check(preomp_decide(10, 0, 4, 1, 2.0) == 1, "stale profile answers one run late");
    preomp_enter(10);
    check(preomp_decide(11, 0, 8, 1, 2.0) == 0, "shrunken inner inside parallel run");
    run(11, 1);
    preomp_exit(10);

    check(preomp_decide(10, 0, 4, 1, 2.0) == 0, "work change reprofiles from scratch");
    preomp_enter(10);
    check(preomp_decide(11, 0, 8, 1, 2.0) == 0, "shrunken inner starts its own serial probe");
    run(11, 3);
    preomp_exit(10);
}

static void test_threshold(void)
{
    /* PREOMP_THRESHOLD=4.0 overrides the compiled-in 1.0: 16/8 = 2 < 4 */
    check(preomp_decide(0, 0, 16, 1, 1.0) == 0, "environment threshold overrides the site");
    run(0, 0);
    check(preomp_decide(0, 0, 64, 1, 1.0) == 1, "wide enough run still passes");
    run(0, 0);
}

int main(int argc, char **argv)
{
    const char *mode = argc > 1 ? argv[1] : "heuristic";

    omp_set_num_threads(8);
    if (strcmp(mode, "heuristic") == 0)
        test_heuristic();
    else if (strcmp(mode, "relaxed") == 0)
        test_relaxed();
    else if (strcmp(mode, "profiling") == 0)
        test_profiling();
    else if (strcmp(mode, "threshold") == 0)
        test_threshold();
    else {
        fprintf(stderr, "unknown mode '%s'\n", mode);
        return 2;
    }
    if (failures) {
        printf("%d check(s) failed in mode %s\n", failures, mode);
        return 1;
    }
    printf("all checks passed in mode %s\n", mode);
    return 0;
}
