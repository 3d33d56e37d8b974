/* Rows of uneven width: the managed loop's trip count changes from row to
 * row, which is what drives profile invalidation in the profiling deciders.
 * The threshold of 2.0 keeps the heuristic from short-circuiting the
 * profiling path at 16 threads. */

void delay_us(long usec);

void ragged_rows(int rows, int widths[])
{
    int o;
    int i;

    for (o = 0; o < rows; o++) {
        delay_us(790);
        #pragma preomp parallel for parallel_threshold(2.0)
        for (i = 0; i < widths[o]; i++) {
            delay_us(4090);
        }
    }
}
