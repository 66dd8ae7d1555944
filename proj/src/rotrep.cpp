#include "art/rotrep.hpp"

#include "art/errors.hpp"

#include <cmath>

namespace art {

Rot6D identity_offset() { return Rot6D{{1, 0, 0, 0, 1, 0}}; }

RotationMatrix rot6d_to_matrix(const Rot6D& v) {
    const double* a1 = v.v.data();
    const double* a2 = v.v.data() + 3;
    const double n1 = std::sqrt(a1[0] * a1[0] + a1[1] * a1[1] + a1[2] * a1[2]);
    if (!(n1 > diff::kNormEps))
        throw DegenerateError("rot6d: first vector norm " + std::to_string(n1) +
                              " below " + std::to_string(diff::kNormEps));
    const double b1[3] = {a1[0] / n1, a1[1] / n1, a1[2] / n1};
    const double proj = a2[0] * b1[0] + a2[1] * b1[1] + a2[2] * b1[2];
    const double u2[3] = {a2[0] - proj * b1[0], a2[1] - proj * b1[1], a2[2] - proj * b1[2]};
    const double n2 = std::sqrt(u2[0] * u2[0] + u2[1] * u2[1] + u2[2] * u2[2]);
    if (!(n2 > diff::kNormEps))
        throw DegenerateError("rot6d: second vector is near parallel to the first "
                              "(residual norm " + std::to_string(n2) + ")");
    const double b2[3] = {u2[0] / n2, u2[1] / n2, u2[2] / n2};
    const double b3[3] = {b1[1] * b2[2] - b1[2] * b2[1],
                          b1[2] * b2[0] - b1[0] * b2[2],
                          b1[0] * b2[1] - b1[1] * b2[0]};
    RotationMatrix r;
    for (int i = 0; i < 3; ++i) {
        r.m[3 * i + 0] = b1[i];
        r.m[3 * i + 1] = b2[i];
        r.m[3 * i + 2] = b3[i];
    }
    return r;
}

diff::NodePtr rot6d_to_matrix(const diff::NodePtr& v6) {
    using namespace diff;
    if (v6->shape != Shape{6})
        throw ShapeError("rot6d_to_matrix: expected shape [6], got " + shape_str(v6->shape));
    NodePtr a1 = slice1d(v6, 0, 3);
    NodePtr a2 = slice1d(v6, 3, 3);
    NodePtr b1 = normalize3(a1);
    // u2 = a2 − (a2·b1) b1
    NodePtr proj = dot(a2, b1);
    NodePtr proj3 = concat(concat(proj, proj), proj);  // scalar broadcast to [3]
    NodePtr u2 = sub(a2, mul(proj3, b1));
    NodePtr b2 = normalize3(u2);
    NodePtr b3 = cross3(b1, b2);
    // rows of [b1; b2; b3] are the basis vectors; the rotation has them as
    // columns, hence the transpose.
    NodePtr rows = reshape(concat(concat(b1, b2), b3), {3, 3});
    return transpose2d(rows);
}

} // namespace art
