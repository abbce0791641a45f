#include <stdlib.h>
#include <stdio.h>

int load_table(const char *path, int **out, int *count)
{
    FILE *f;
    int *tab = NULL;
    int n = 0, cap = 0, v;
    int rc = -1;

    f = fopen(path, "r");
    if (!f)
        goto out;
    while (fscanf(f, "%d", &v) == 1) {
        if (n == cap) {
            int *t;
            cap = cap ? cap * 2 : 16;
            t = realloc(tab, cap * sizeof(*tab));
            if (!t)
                goto fail;
            tab = t;
        }
        tab[n++] = v;
    }
    *out = tab;
    *count = n;
    rc = 0;
    goto close;
fail:
    free(tab);
close:
    fclose(f);
out:
    return rc;
}
