#include <stdio.h>
#include <string.h>

#include "rugscan.h"

int main(int argc, char **argv) {
    if (argc != 3) {
        fprintf(stderr, "usage: smoke <fixture-dir> <mint>\n");
        return 2;
    }
    RugscanEngine *engine = NULL;
    RugscanParams params = rugscan_params_default();
    if (rugscan_engine_new(&params, &engine) != RUGSCAN_STATUS_OK) {
        return 1;
    }
    char source[4096];
    snprintf(source, sizeof source, "fixture:%s", argv[1]);
    if (rugscan_engine_set_source(engine, source, NULL, NULL) != RUGSCAN_STATUS_OK) {
        fprintf(stderr, "%s\n", rugscan_last_error());
        return 1;
    }
    char *verdict = NULL;
    RugscanStatus st = rugscan_scan(engine, argv[2], &verdict);
    if (st != RUGSCAN_STATUS_OK) {
        fprintf(stderr, "%s\n", rugscan_last_error());
        return 1;
    }
    printf("%s\n", verdict);
    rugscan_string_free(verdict);

    st = rugscan_scan(engine, "not a mint", &verdict);
    if (st != RUGSCAN_STATUS_INVALID_ARGUMENT || rugscan_last_error() == NULL) {
        return 1;
    }
    RugscanMetrics m;
    rugscan_metrics_from_counts(109, 0, 0, 8, &m);
    printf("%.4f %.4f %.4f\n", m.precision, m.recall, m.f1);
    rugscan_engine_free(engine);
    return 0;
}
