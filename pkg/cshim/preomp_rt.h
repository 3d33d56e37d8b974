/* Runtime decision library for decision-managed loops.
 *
 * Generated code brackets every managed loop with preomp_enter/preomp_exit
 * and asks preomp_decide, just before the loop, whether the parallel or the
 * serial copy should run this time.  The decision policy is selected per
 * process through the environment:
 *
 *   PREOMP_DECIDER     heuristic (default) | profiling | relaxed_profiling
 *   PREOMP_THRESHOLD   overrides the compiled-in threshold of every site
 *   PREOMP_TRACE       file that receives one CSV line per decision:
 *                      loop,invocation,iters,threads,outer_active,phase,
 *                      decision,reason
 *   PREOMP_DEBUG       abort with a diagnostic on unbalanced enter/exit
 *
 * Thread counts come from the hosting OpenMP runtime; decisions nested
 * inside a loop that is currently running its parallel copy always come out
 * serial (one level of parallelism at a time).
 */

#ifndef PREOMP_RT_H
#define PREOMP_RT_H

#ifdef __cplusplus
extern "C" {
#endif

int preomp_decide(int id, long init, long bound, long step, double threshold);
void preomp_enter(int id);
void preomp_exit(int id);

#ifdef __cplusplus
}
#endif

#endif /* PREOMP_RT_H */
