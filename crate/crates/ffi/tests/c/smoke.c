#include <stdio.h>
#include "boltzmann.h"

int smoke(void) {
    BoltzmannGrid *grid = NULL;
    if (boltzmann_grid_new(8, 4.0, &grid) != BOLTZMANN_OK) {
        fprintf(stderr, "%s\n", boltzmann_last_error());
        return 1;
    }
    size_t len = boltzmann_grid_len(grid);
    double velocity[3] = {0.0, 0.0, 0.0};
    double f[512];
    double q[512];
    BoltzmannMoments m;
    BoltzmannOperator *op = NULL;
    int status = boltzmann_maxwellian(grid, 1.0, velocity, 1.0, f, len);
    if (status == BOLTZMANN_OK) status = boltzmann_operator_new(grid, 0.0, &op);
    if (status == BOLTZMANN_OK) status = boltzmann_operator_collide(op, f, 1.0, q, len);
    if (status == BOLTZMANN_OK) status = boltzmann_moments(grid, q, len, &m);
    boltzmann_operator_free(op);
    boltzmann_grid_free(grid);
    return status;
}
