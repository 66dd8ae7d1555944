#pragma once

#include <cstddef>

namespace art::kernels {

// Execution backend for the data-parallel kernels. Parallel uses OpenMP when
// compiled in and falls back to the serial path otherwise. Every parallel
// loop writes disjoint output elements and runs the same per-element
// arithmetic as the serial reference, so results are bitwise identical across
// backends and thread counts. Reductions over kernel outputs stay serial in
// the callers for the same reason.
enum class Backend { Serial, Parallel };

Backend& backend();  // process-wide setting, defaults to Parallel

bool openmp_compiled();
int max_threads();

// c (m×n) = a (m×k) · b (k×n), row-major. With accumulate, adds into c.
void matmul(const double* a, const double* b, double* c, int m, int k, int n,
            bool accumulate = false);

// ga (m×k) += g (m×n) · bᵀ — gradient of matmul w.r.t. its left operand.
void matmul_grad_left(const double* g, const double* b, double* ga, int m, int k, int n);

// gb (k×n) += aᵀ · g (m×n) — gradient of matmul w.r.t. its right operand.
void matmul_grad_right(const double* a, const double* g, double* gb, int m, int k, int n);

// For each of the na column-points of a (3×na row-major), the index and
// squared Euclidean distance of the nearest column-point of b (3×nb).
void nearest_point(const double* a, int na, const double* b, int nb,
                   int* idx, double* sqdist);

// Pairwise rotation distances in degrees, quotiented by a finite symmetry
// group: out[t] = min over s in sym of angle(q_i, q_j · s), where t walks the
// strict upper triangle (i < j) in row-major order. Rotations are given as
// 3×3 row-major blocks of 9 doubles; sym must contain at least the identity.
void pairwise_angles(const double* rotations, int n, const double* sym, int n_sym,
                     double* out);

// Serial reference implementations, kept for backend-equivalence tests and
// the kernel benchmark.
void matmul_serial(const double* a, const double* b, double* c, int m, int k, int n,
                   bool accumulate = false);
void matmul_grad_left_serial(const double* g, const double* b, double* ga, int m, int k, int n);
void matmul_grad_right_serial(const double* a, const double* g, double* gb, int m, int k, int n);
void nearest_point_serial(const double* a, int na, const double* b, int nb,
                          int* idx, double* sqdist);
void pairwise_angles_serial(const double* rotations, int n, const double* sym, int n_sym,
                            double* out);

} // namespace art::kernels
