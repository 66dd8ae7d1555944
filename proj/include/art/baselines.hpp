#pragma once

#include "art/geometry.hpp"

namespace art {

enum class BaselineKind { Identity, Pca };

struct PcaResult {
    RotationMatrix rotation;
    // Set when adjacent covariance eigenvalues are too close for the
    // principal axes to be well determined (e.g. an isotropic sphere).
    bool ambiguous_axes = false;
};

// Rows of the returned rotation are covariance eigenvectors in descending
// eigenvalue order. Signs are fixed by the positive third central moment
// along each axis (first nonzero coordinate as fallback); the third row is
// the cross product of the first two, forcing det = +1.
PcaResult pca_align(const PointCloud& x);

PcaResult align_with_baseline(BaselineKind kind, const PointCloud& x);

} // namespace art
