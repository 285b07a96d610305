#ifndef BOLTZMANN_H
#define BOLTZMANN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define BOLTZMANN_OK 0

/**
 * A required pointer was null or a string was not UTF-8.
 */
#define BOLTZMANN_ERR_NULL 1

#define BOLTZMANN_ERR_CONFIG 2

#define BOLTZMANN_ERR_IO 3

#define BOLTZMANN_ERR_WEIGHT_CACHE 4

#define BOLTZMANN_ERR_NUMERICAL 5

#define BOLTZMANN_ERR_COMMUNICATION 6

#define BOLTZMANN_ERR_INVALID_INPUT 7

/**
 * The call needs state that is not there yet, such as results before a run.
 */
#define BOLTZMANN_ERR_STATE 8

#define BOLTZMANN_ERR_PANIC 9

/**
 * Velocity lattice of `n^3` nodes on `[-half_width, half_width)^3`.
 */
typedef struct BoltzmannGrid BoltzmannGrid;

/**
 * Conservative collision operator with its weight table and scratch space.
 */
typedef struct BoltzmannOperator BoltzmannOperator;

/**
 * A configured run and, after [`boltzmann_simulation_run`], its record.
 */
typedef struct BoltzmannSimulation BoltzmannSimulation;

/**
 * Macroscopic moments of one distribution.
 */
typedef struct BoltzmannMoments {
  double rho;
  double velocity[3];
  double temperature;
  double energy;
  /**
   * `sum f log f` over positive nodes.
   */
  double h;
} BoltzmannMoments;

/**
 * One row of the moment table.
 */
typedef struct BoltzmannMomentRow {
  double t;
  double x_center;
  double dx;
  double rho;
  double v1;
  double temperature;
  double h;
} BoltzmannMomentRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty if none. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *boltzmann_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *boltzmann_version(void);

int32_t boltzmann_grid_new(size_t n, double half_width, struct BoltzmannGrid **out);

void boltzmann_grid_free(struct BoltzmannGrid *grid);

/**
 * Number of lattice nodes, `n^3`; 0 for a null handle.
 */
size_t boltzmann_grid_len(const struct BoltzmannGrid *grid);

/**
 * Writes the `n` one-dimensional node values into `out`.
 */
int32_t boltzmann_grid_nodes(const struct BoltzmannGrid *grid, double *out, size_t len);

/**
 * Samples `rho / (2 pi T)^{3/2} exp(-|v - V|^2 / (2T))` on the lattice.
 */
int32_t boltzmann_maxwellian(const struct BoltzmannGrid *grid,
                             double rho,
                             const double *velocity,
                             double temperature,
                             double *out,
                             size_t len);

int32_t boltzmann_moments(const struct BoltzmannGrid *grid,
                          const double *f,
                          size_t len,
                          struct BoltzmannMoments *out);

/**
 * Builds the operator for kernel exponent `lambda`, generating weights.
 */
int32_t boltzmann_operator_new(const struct BoltzmannGrid *grid,
                               double lambda,
                               struct BoltzmannOperator **out);

/**
 * Builds the operator from a weight cache file written for the same grid and kernel.
 */
int32_t boltzmann_operator_load(const struct BoltzmannGrid *grid,
                                double lambda,
                                const char *path,
                                struct BoltzmannOperator **out);

/**
 * Writes the operator's weight table to `path`.
 */
int32_t boltzmann_operator_save(const struct BoltzmannOperator *op, const char *path);

void boltzmann_operator_free(struct BoltzmannOperator *op);

/**
 * `out = (1 / epsilon) * conservative collision term of f`.
 */
int32_t boltzmann_operator_collide(struct BoltzmannOperator *op,
                                   const double *f,
                                   double epsilon,
                                   double *out,
                                   size_t len);

/**
 * Parses config text (`key = value` lines) and prepares the weights.
 */
int32_t boltzmann_simulation_new(const char *config_text, struct BoltzmannSimulation **out);

void boltzmann_simulation_free(struct BoltzmannSimulation *sim);

/**
 * Runs to the configured end time, replacing any earlier record.
 */
int32_t boltzmann_simulation_run(struct BoltzmannSimulation *sim);

/**
 * Number of moment rows in the record; 0 before a run.
 */
size_t boltzmann_simulation_moment_count(const struct BoltzmannSimulation *sim);

/**
 * Copies up to `capacity` moment rows into `out` and stores the count copied.
 */
int32_t boltzmann_simulation_moments(const struct BoltzmannSimulation *sim,
                                     struct BoltzmannMomentRow *out,
                                     size_t capacity,
                                     size_t *written);

/**
 * Largest relative mass-balance residual over the recorded output times.
 */
int32_t boltzmann_simulation_mass_residual(const struct BoltzmannSimulation *sim, double *out);

/**
 * Writes the CSV tables and run summary into directory `dir`.
 */
int32_t boltzmann_simulation_write(const struct BoltzmannSimulation *sim, const char *dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BOLTZMANN_H */
