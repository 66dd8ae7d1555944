#pragma once

#include "art/geometry.hpp"
#include "art/tensor.hpp"

#include <array>

namespace art {

// Continuous 6D rotation representation: two stacked 3-vectors (a1, a2)
// mapped to SO(3) by Gram-Schmidt. The two vectors become the first two
// COLUMNS of the rotation; the third column is their cross product.
struct Rot6D {
    std::array<double, 6> v{1, 0, 0, 0, 1, 0};
};

// The offset added to the rotation head's output so a zero-initialized
// network predicts exactly the identity: (1,0,0, 0,1,0).
Rot6D identity_offset();

// Throws DegenerateError when a1 is near zero or a2 is near parallel to a1.
RotationMatrix rot6d_to_matrix(const Rot6D& v);

// Differentiable variant: [6] -> [3×3]. Same construction, finite gradients
// away from degeneracy.
diff::NodePtr rot6d_to_matrix(const diff::NodePtr& v6);

} // namespace art
