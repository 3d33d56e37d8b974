/* Driver for the generated benchmarks.  Compile it against exactly one
 * generated translation unit: the default expects synth_nest, and
 * -DBENCH_RAGGED switches to ragged_rows.  The single argument is the
 * number of repeats of the whole nest. */

#include <stdlib.h>
#include <time.h>

#ifdef BENCH_RAGGED
void ragged_rows(int rows, int widths[]);
#else
void synth_nest(void);
#endif

void delay_us(long usec)
{
    struct timespec ts;
    ts.tv_sec = usec / 1000000;
    ts.tv_nsec = (usec % 1000000) * 1000;
    nanosleep(&ts, NULL);
}

int main(int argc, char **argv)
{
    int repeats = argc > 1 ? atoi(argv[1]) : 1;
    int r;
#ifdef BENCH_RAGGED
    int widths[8] = {16, 16, 16, 16, 24, 24, 24, 24};
#endif

    for (r = 0; r < repeats; r++) {
#ifdef BENCH_RAGGED
        ragged_rows(8, widths);
#else
        synth_nest();
#endif
    }
    return 0;
}
