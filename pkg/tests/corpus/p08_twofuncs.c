void row(int i);
void col(int j);

void horizontal(int n) {
    int i;
    #pragma preomp parallel for
    for (i = 0; i < n; i++) {
        row(i);
    }
}

void vertical(int m) {
    int j;
    #pragma preomp parallel for parallel_threshold(2.5)
    for (j = 0; j < m; j++) {
        col(j);
    }
}
