#include "art/baselines.hpp"

#include "art/errors.hpp"

#include <algorithm>
#include <cmath>

namespace art {

namespace {

// Cyclic Jacobi on a symmetric 3×3; small and dependency-free. Returns
// eigenvalues and matching eigenvectors (columns of v), unsorted.
void jacobi_eigen3(const double a_in[9], double eval[3], double evec[9]) {
    double a[9];
    std::copy(a_in, a_in + 9, a);
    double v[9] = {1, 0, 0, 0, 1, 0, 0, 0, 1};
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = std::abs(a[1]) + std::abs(a[2]) + std::abs(a[5]);
        if (off < 1e-15) break;
        for (int p = 0; p < 2; ++p)
            for (int q = p + 1; q < 3; ++q) {
                const double apq = a[3 * p + q];
                if (std::abs(apq) < 1e-18) continue;
                const double app = a[3 * p + p], aqq = a[3 * q + q];
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < 3; ++k) {
                    const double akp = a[3 * k + p], akq = a[3 * k + q];
                    a[3 * k + p] = c * akp - s * akq;
                    a[3 * k + q] = s * akp + c * akq;
                }
                for (int k = 0; k < 3; ++k) {
                    const double apk = a[3 * p + k], aqk = a[3 * q + k];
                    a[3 * p + k] = c * apk - s * aqk;
                    a[3 * q + k] = s * apk + c * aqk;
                }
                for (int k = 0; k < 3; ++k) {
                    const double vkp = v[3 * k + p], vkq = v[3 * k + q];
                    v[3 * k + p] = c * vkp - s * vkq;
                    v[3 * k + q] = s * vkp + c * vkq;
                }
            }
    }
    for (int i = 0; i < 3; ++i) eval[i] = a[3 * i + i];
    std::copy(v, v + 9, evec);
}

// Relative eigenvalue gap under which the principal axes count as ambiguous.
constexpr double kAmbiguousGap = 0.05;

} // namespace

PcaResult pca_align(const PointCloud& x) {
    Vec3 c = {0, 0, 0};
    for (int i = 0; i < x.n; ++i)
        for (int r = 0; r < 3; ++r) c[r] += x.at(r, i);
    for (auto& v : c) v /= x.n;

    double cov[9] = {0};
    for (int i = 0; i < x.n; ++i) {
        const double d[3] = {x.at(0, i) - c[0], x.at(1, i) - c[1], x.at(2, i) - c[2]};
        for (int r = 0; r < 3; ++r)
            for (int s = 0; s < 3; ++s) cov[3 * r + s] += d[r] * d[s];
    }
    for (auto& v : cov) v /= x.n;

    double eval[3], evec[9];
    jacobi_eigen3(cov, eval, evec);
    int order[3] = {0, 1, 2};
    std::sort(order, order + 3, [&](int a, int b) { return eval[a] > eval[b]; });

    PcaResult out;
    const double top = std::max(eval[order[0]], 1e-30);
    if ((eval[order[0]] - eval[order[1]]) / top < kAmbiguousGap ||
        (eval[order[1]] - eval[order[2]]) / top < kAmbiguousGap)
        out.ambiguous_axes = true;

    // rows 0 and 1 from the two leading eigenvectors, sign-fixed by skewness
    double rows[2][3];
    for (int r = 0; r < 2; ++r) {
        const int k = order[r];
        double e[3] = {evec[k], evec[3 + k], evec[6 + k]};
        double skew = 0.0;
        for (int i = 0; i < x.n; ++i) {
            const double proj = (x.at(0, i) - c[0]) * e[0] + (x.at(1, i) - c[1]) * e[1] +
                                (x.at(2, i) - c[2]) * e[2];
            skew += proj * proj * proj;
        }
        double sign;
        if (std::abs(skew) > 1e-12 * x.n) {
            sign = skew > 0 ? 1.0 : -1.0;
        } else {
            sign = 1.0;  // first nonzero coordinate decides
            for (double coord : e) {
                if (std::abs(coord) > 1e-12) {
                    sign = coord > 0 ? 1.0 : -1.0;
                    break;
                }
            }
        }
        for (int i = 0; i < 3; ++i) rows[r][i] = sign * e[i];
    }

    RotationMatrix r;
    for (int i = 0; i < 3; ++i) {
        r.m[i] = rows[0][i];
        r.m[3 + i] = rows[1][i];
    }
    r.m[6] = rows[0][1] * rows[1][2] - rows[0][2] * rows[1][1];
    r.m[7] = rows[0][2] * rows[1][0] - rows[0][0] * rows[1][2];
    r.m[8] = rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0];
    out.rotation = r;
    return out;
}

PcaResult align_with_baseline(BaselineKind kind, const PointCloud& x) {
    if (kind == BaselineKind::Identity) return {RotationMatrix::identity(), false};
    return pca_align(x);
}

} // namespace art
