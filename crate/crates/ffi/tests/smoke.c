#include <math.h>
#include <stdio.h>
#include "osgood.h"

#define CHECK(call)                                                       \
    do {                                                                  \
        OsgoodStatus s_ = (call);                                         \
        if (s_ != OSGOOD_STATUS_OK) {                                     \
            fprintf(stderr, "%s -> %d: %s\n", #call, s_, osgood_last_error()); \
            return 1;                                                     \
        }                                                                 \
    } while (0)

int main(void) {
    OsgoodMultiplier *m = NULL;
    double e[1] = {1.0};
    CHECK(osgood_multiplier_iterated_log(e, 1, &m));
    double v = 0.0;
    CHECK(osgood_multiplier_eval(m, 1e6, &v));
    OsgoodKernelRow row;
    CHECK(osgood_radial_kernel(m, 0.1, &row));
    OsgoodVerdictCode verdict;
    CHECK(osgood_multiplier_osgood_verdict(m, &verdict));
    if (osgood_multiplier_constant(-1.0, NULL) != OSGOOD_STATUS_INVALID_ARGUMENT || osgood_last_error() == NULL) {
        return 2;
    }
    printf("version=%s m=%.12f f1=%.12f verdict=%d\n", osgood_version(), v, row.f1, (int)verdict);
    osgood_multiplier_free(m);
    return 0;
}
