/* Two-level nest shaped like the synthetic scenario: 8 outer iterations of
 * fixed pre-work around 16 inner iterations of body work.  Work is a sleep,
 * not a computation, so a thread team overlaps for real even when the
 * machine has a single busy core. */

void delay_us(long usec);

void synth_nest(void)
{
    int o;
    int i;

    #pragma preomp parallel for private(i)
    for (o = 0; o < 8; o++) {
        delay_us(7900);
        #pragma preomp parallel for
        for (i = 0; i < 16; i++) {
            delay_us(4090);
        }
    }
}
