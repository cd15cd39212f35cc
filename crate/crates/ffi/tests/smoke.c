#include <stdio.h>
#include "skewgraph.h"

int main(void) {
    SgSystem *sys = NULL;
    if (sg_system_from_preset("binary_ifs", &sys) != SG_STATUS_OK) {
        fprintf(stderr, "%s\n", sg_last_error());
        return 1;
    }
    /* past 1, 2, then 1 forever: digits 0, 1, 0, ... */
    const uint8_t past[] = {1, 2};
    const uint8_t tail[] = {1};
    double point = -1.0;
    if (sg_code(sys, past, 2, tail, 1, 200, 1e-12, &point, NULL) != SG_STATUS_OK) {
        fprintf(stderr, "%s\n", sg_last_error());
        return 1;
    }
    SgSystem *missing = NULL;
    SgStatus st = sg_system_from_preset("no_such_preset", &missing);
    printf("point %.2f status %d\n", point, (int)st);
    sg_system_free(sys);
    return 0;
}
