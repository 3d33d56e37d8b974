#include "preomp_rt.h"

void work(void);

void region(int I, int J) {
    int i;
    int j;
    preomp_enter(0);
    #pragma omp parallel for private(j) if(preomp_decide(0, 0, I, 1, 1.0))
    for (i = 0; i < I; i++) {
        preomp_enter(1);
        #pragma omp parallel for shared(i) if(preomp_decide(1, 0, J, 1, 1.0))
        for (j = 0; j < J; j++) {
            work();
        }
        preomp_exit(1);
    }
    preomp_exit(0);
}
