#include "art/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#ifdef ART_HAVE_OPENMP
#include <omp.h>
#endif

namespace art::kernels {

Backend& backend() {
    static Backend b = Backend::Parallel;
    return b;
}

bool openmp_compiled() {
#ifdef ART_HAVE_OPENMP
    return true;
#else
    return false;
#endif
}

int max_threads() {
#ifdef ART_HAVE_OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

// Work below this many multiply-adds is not worth a parallel region.
constexpr long kParallelMinWork = 1 << 19;

namespace {

// Row-range workers shared by both backends. Every variant accumulates each
// output element over p in ascending order with one fused multiply-add per
// step, so results do not depend on row grouping, column tiling, backend, or
// thread count: bitwise identical everywhere.

inline double dot_split4(const double* __restrict x, const double* __restrict y, int n);

inline void matmul_rows(const double* __restrict a, const double* __restrict b,
                        double* __restrict c, int r0, int r1, int k, int n,
                        bool accumulate) {
    if (n == 1) {  // matrix-vector: one dot product per output row
        for (int i = r0; i < r1; ++i) {
            const double s = dot_split4(a + static_cast<std::size_t>(i) * k, b, k);
            c[i] = accumulate ? c[i] + s : s;
        }
        return;
    }
    constexpr int JT = 16;  // column tile held in registers across the k loop
    int i = r0;
    for (; i + 4 <= r1; i += 4) {
        const double* a0 = a + static_cast<std::size_t>(i) * k;
        const double* a1 = a0 + k;
        const double* a2 = a1 + k;
        const double* a3 = a2 + k;
        double* c0 = c + static_cast<std::size_t>(i) * n;
        double* c1 = c0 + n;
        double* c2 = c1 + n;
        double* c3 = c2 + n;
        int j = 0;
        for (; j + JT <= n; j += JT) {
            double t0[JT], t1[JT], t2[JT], t3[JT];
            for (int q = 0; q < JT; ++q) {
                t0[q] = accumulate ? c0[j + q] : 0.0;
                t1[q] = accumulate ? c1[j + q] : 0.0;
                t2[q] = accumulate ? c2[j + q] : 0.0;
                t3[q] = accumulate ? c3[j + q] : 0.0;
            }
            for (int p = 0; p < k; ++p) {
                const double* bp = b + static_cast<std::size_t>(p) * n + j;
                const double v0 = a0[p], v1 = a1[p], v2 = a2[p], v3 = a3[p];
                for (int q = 0; q < JT; ++q) {
                    const double bq = bp[q];
                    t0[q] += v0 * bq;
                    t1[q] += v1 * bq;
                    t2[q] += v2 * bq;
                    t3[q] += v3 * bq;
                }
            }
            for (int q = 0; q < JT; ++q) {
                c0[j + q] = t0[q];
                c1[j + q] = t1[q];
                c2[j + q] = t2[q];
                c3[j + q] = t3[q];
            }
        }
        if (j < n) {  // column tail, same per-element accumulation order
            if (!accumulate) {
                std::fill(c0 + j, c0 + n, 0.0);
                std::fill(c1 + j, c1 + n, 0.0);
                std::fill(c2 + j, c2 + n, 0.0);
                std::fill(c3 + j, c3 + n, 0.0);
            }
            for (int p = 0; p < k; ++p) {
                const double* bp = b + static_cast<std::size_t>(p) * n;
                const double v0 = a0[p], v1 = a1[p], v2 = a2[p], v3 = a3[p];
                for (int q = j; q < n; ++q) {
                    const double bq = bp[q];
                    c0[q] += v0 * bq;
                    c1[q] += v1 * bq;
                    c2[q] += v2 * bq;
                    c3[q] += v3 * bq;
                }
            }
        }
    }
    for (; i < r1; ++i) {
        double* ci = c + static_cast<std::size_t>(i) * n;
        if (!accumulate) std::fill(ci, ci + n, 0.0);
        const double* ai = a + static_cast<std::size_t>(i) * k;
        for (int p = 0; p < k; ++p) {
            const double av = ai[p];
            const double* bp = b + static_cast<std::size_t>(p) * n;
            for (int j2 = 0; j2 < n; ++j2) ci[j2] += av * bp[j2];
        }
    }
}

// Four-way split accumulators break the FP dependency chain of the dot
// product; the split is written out explicitly so the summation order is
// fixed regardless of optimization level.
inline double dot_split4(const double* __restrict x, const double* __restrict y, int n) {
    double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
    int j = 0;
    for (; j + 4 <= n; j += 4) {
        s0 += x[j] * y[j];
        s1 += x[j + 1] * y[j + 1];
        s2 += x[j + 2] * y[j + 2];
        s3 += x[j + 3] * y[j + 3];
    }
    double acc = (s0 + s1) + (s2 + s3);
    for (; j < n; ++j) acc += x[j] * y[j];
    return acc;
}

// Scratch for the transposed operand of the gradient kernels. Concurrent
// kernel calls only happen on distinct workers, per the confinement contract,
// so one buffer per thread suffices.
std::vector<double>& transpose_scratch() {
    static thread_local std::vector<double> scratch;
    return scratch;
}

const double* transpose_into_scratch(const double* src, int rows, int cols) {
    auto& scratch = transpose_scratch();
    scratch.resize(static_cast<std::size_t>(rows) * cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            scratch[static_cast<std::size_t>(c) * rows + r] =
                src[static_cast<std::size_t>(r) * cols + c];
    return scratch.data();
}

inline void nearest_point_range(const double* a, int na, const double* b, int nb,
                                int* idx, double* sqdist, int i0, int i1) {
    const double* bx = b;
    const double* by = b + nb;
    const double* bz = b + 2 * nb;
    for (int i = i0; i < i1; ++i) {
        const double ax = a[i], ay = a[na + i], az = a[2 * na + i];
        double best = std::numeric_limits<double>::infinity();
        int best_j = 0;
        for (int j = 0; j < nb; ++j) {
            const double dx = ax - bx[j];
            const double dy = ay - by[j];
            const double dz = az - bz[j];
            const double d = dx * dx + dy * dy + dz * dz;
            if (d < best) {
                best = d;
                best_j = j;
            }
        }
        idx[i] = best_j;
        sqdist[i] = best;
    }
}

inline double angle_deg_between(const double* r1, const double* r2) {
    // trace(r1ᵀ r2) = sum of elementwise products
    double tr = 0.0;
    for (int e = 0; e < 9; ++e) tr += r1[e] * r2[e];
    double c = (tr - 1.0) / 2.0;
    c = std::clamp(c, -1.0, 1.0);
    return std::acos(c) * (180.0 / 3.14159265358979323846);
}

inline void pairwise_angles_range(const double* q, int n, const double* sym, int n_sym,
                                  double* out, long t0, long t1) {
    for (long t = t0; t < t1; ++t) {
        // invert t -> (i, j), i < j, row-major upper triangle
        long i = 0;
        long rem = t;
        long row_len = n - 1;
        while (rem >= row_len) {
            rem -= row_len;
            --row_len;
            ++i;
        }
        long j = i + 1 + rem;
        const double* qi = q + 9 * i;
        const double* qj = q + 9 * j;
        double best = 181.0;
        for (int s = 0; s < n_sym; ++s) {
            const double* sm = sym + 9 * s;
            double qjs[9];  // qj · s
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c)
                    qjs[3 * r + c] = qj[3 * r] * sm[c] + qj[3 * r + 1] * sm[3 + c] +
                                     qj[3 * r + 2] * sm[6 + c];
            best = std::min(best, angle_deg_between(qi, qjs));
        }
        out[t] = best;
    }
}

inline bool go_parallel(long work, int cols) {
#ifdef ART_HAVE_OPENMP
    return backend() == Backend::Parallel && work >= kParallelMinWork && cols >= 8;
#else
    (void)work;
    (void)cols;
    return false;
#endif
}

} // namespace

void matmul_serial(const double* a, const double* b, double* c, int m, int k, int n,
                   bool accumulate) {
    matmul_rows(a, b, c, 0, m, k, n, accumulate);
}

void matmul(const double* a, const double* b, double* c, int m, int k, int n,
            bool accumulate) {
    if (go_parallel(static_cast<long>(m) * k * n, n)) {
#ifdef ART_HAVE_OPENMP
        // chunks aligned to the 4-row unroll so each row runs the same code
        // path as in the serial call
        const int blocks = (m + 3) / 4;
#pragma omp parallel for schedule(static)
        for (int blk = 0; blk < blocks; ++blk)
            matmul_rows(a, b, c, 4 * blk, std::min(m, 4 * blk + 4), k, n, accumulate);
#endif
    } else {
        matmul_rows(a, b, c, 0, m, k, n, accumulate);
    }
}

// ga (m×k) += g (m×n) · bᵀ: transpose b once, then run the matmul worker with
// contiguous inner loops.
void matmul_grad_left_serial(const double* g, const double* b, double* ga,
                             int m, int k, int n) {
    const double* bt = transpose_into_scratch(b, k, n);  // now n×k
    matmul_rows(g, bt, ga, 0, m, n, k, /*accumulate=*/true);
}

void matmul_grad_left(const double* g, const double* b, double* ga, int m, int k, int n) {
    if (go_parallel(static_cast<long>(m) * k * n, k)) {
#ifdef ART_HAVE_OPENMP
        const double* bt = transpose_into_scratch(b, k, n);
        const int blocks = (m + 3) / 4;
#pragma omp parallel for schedule(static)
        for (int blk = 0; blk < blocks; ++blk)
            matmul_rows(g, bt, ga, 4 * blk, std::min(m, 4 * blk + 4), n, k, true);
#endif
    } else {
        matmul_grad_left_serial(g, b, ga, m, k, n);
    }
}

// gb (k×n) += aᵀ · g: same transpose trick on a. For the matrix-vector case
// the whole gb row fits in cache, so a direct accumulation over rows of a is
// cheaper than transposing.
void matmul_grad_right_serial(const double* a, const double* g, double* gb,
                              int m, int k, int n) {
    if (n == 1) {
        for (int i = 0; i < m; ++i) {
            const double v = g[i];
            const double* ai = a + static_cast<std::size_t>(i) * k;
            for (int p = 0; p < k; ++p) gb[p] += v * ai[p];
        }
        return;
    }
    const double* at = transpose_into_scratch(a, m, k);  // now k×m
    matmul_rows(at, g, gb, 0, k, m, n, /*accumulate=*/true);
}

void matmul_grad_right(const double* a, const double* g, double* gb, int m, int k, int n) {
    if (go_parallel(static_cast<long>(m) * k * n, n)) {
#ifdef ART_HAVE_OPENMP
        const double* at = transpose_into_scratch(a, m, k);
        const int blocks = (k + 3) / 4;
#pragma omp parallel for schedule(static)
        for (int blk = 0; blk < blocks; ++blk)
            matmul_rows(at, g, gb, 4 * blk, std::min(k, 4 * blk + 4), m, n, true);
#endif
    } else {
        matmul_grad_right_serial(a, g, gb, m, k, n);
    }
}

void nearest_point_serial(const double* a, int na, const double* b, int nb,
                          int* idx, double* sqdist) {
    nearest_point_range(a, na, b, nb, idx, sqdist, 0, na);
}

void nearest_point(const double* a, int na, const double* b, int nb,
                   int* idx, double* sqdist) {
    if (go_parallel(static_cast<long>(na) * nb * 4, nb)) {
#ifdef ART_HAVE_OPENMP
#pragma omp parallel for schedule(static)
        for (int i = 0; i < na; ++i) nearest_point_range(a, na, b, nb, idx, sqdist, i, i + 1);
#endif
    } else {
        nearest_point_range(a, na, b, nb, idx, sqdist, 0, na);
    }
}

void pairwise_angles_serial(const double* rotations, int n, const double* sym, int n_sym,
                            double* out) {
    const long pairs = static_cast<long>(n) * (n - 1) / 2;
    pairwise_angles_range(rotations, n, sym, n_sym, out, 0, pairs);
}

void pairwise_angles(const double* rotations, int n, const double* sym, int n_sym,
                     double* out) {
    const long pairs = static_cast<long>(n) * (n - 1) / 2;
    if (go_parallel(pairs * n_sym * 64, 8)) {
#ifdef ART_HAVE_OPENMP
#pragma omp parallel for schedule(static)
        for (long t = 0; t < pairs; ++t)
            pairwise_angles_range(rotations, n, sym, n_sym, out, t, t + 1);
#endif
    } else {
        pairwise_angles_range(rotations, n, sym, n_sym, out, 0, pairs);
    }
}

} // namespace art::kernels
