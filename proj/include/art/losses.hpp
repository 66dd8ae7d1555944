#pragma once

#include "art/geometry.hpp"
#include "art/network.hpp"
#include "art/tensor.hpp"

#include <vector>

namespace art {

struct LossWeights {
    double lambda1 = 0.02;  // rotation-matrix equivariance weight
    double lambda2 = 0.0;   // Chamfer equivariance weight (symmetric families)
};

struct LossBreakdown {
    double recon = 0;
    double rot_matrix = 0;   // mean over sampled rotations
    double rot_chamfer = 0;  // mean over sampled rotations
    double total = 0;        // recon + λ1·rot_matrix + λ2·rot_chamfer
};

struct AdjointResult {
    diff::NodePtr output;    // [3×M], in the input's orientation frame
    diff::NodePtr rotation;  // [3×3], the refined predicted rotation
};

// output = Rᵀ · decode(R·x) with R = iterative_refine(model, x). A fresh
// model (R = I exactly) reduces to the plain auto-encoder.
AdjointResult adjoint_forward(ArtModel& model, const PointCloud& x);
PointCloud adjoint_reconstruct(ArtModel& model, const PointCloud& x);

// Chamfer distance between x and the adjoint output, differentiable through
// the predicted rotation and the decoder.
diff::NodePtr recon_loss(ArtModel& model, const PointCloud& x);

// ‖R̃ − r2ᵀ·r1‖²_F. R̃ is a constant sample; gradients flow into r1 and r2.
diff::NodePtr rot_matrix_loss(const diff::NodePtr& r1, const diff::NodePtr& r2,
                              const RotationMatrix& r_tilde);

// Chamfer(X̃, r2ᵀ·r1·X): zero whenever r2ᵀr1 maps X onto X̃ as a point set,
// which tolerates rotations inside X's symmetry group.
diff::NodePtr rot_chamfer_loss(const PointCloud& x_tilde, const PointCloud& x,
                               const diff::NodePtr& r1, const diff::NodePtr& r2);

struct ArtLoss {
    diff::NodePtr total;
    LossBreakdown breakdown;
};

// total = recon + mean over sampled R̃ of (λ1·rot_matrix + λ2·rot_chamfer).
// The rotation count must match the mode: 1 for Azimuthal, 3 for FullSO3.
ArtLoss art_loss(ArtModel& model, const PointCloud& x,
                 const std::vector<RotationMatrix>& rotations, const LossWeights& w,
                 RotationMode::Kind mode);

} // namespace art
