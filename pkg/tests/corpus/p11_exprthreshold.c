void body(int i, int j);

void tuned(int n, int m, int cutoff) {
    int i;
    int j;
    #pragma preomp parallel for private(j) shared(n) parallel_threshold(cutoff)
    for (i = 0; i < n; i++) {
        #pragma preomp parallel for shared(i)
        for (j = 0; j < m; j++) {
            body(i, j);
        }
    }
}
