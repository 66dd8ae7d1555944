#include "art/losses.hpp"

#include "art/errors.hpp"

namespace art {

using diff::NodePtr;

namespace {

// Adjoint pipeline from an already-built rotation node.
NodePtr adjoint_output(ArtModel& model, const PointCloud& x, const NodePtr& r) {
    NodePtr rotated = diff::matmul(r, cloud_node(x));
    NodePtr decoded = autoencode_node(model, rotated);
    return diff::matmul(diff::transpose2d(r), decoded);
}

} // namespace

AdjointResult adjoint_forward(ArtModel& model, const PointCloud& x) {
    NodePtr r = iterative_refine_node(model, x, model.cfg.refine_steps);
    return {adjoint_output(model, x, r), r};
}

PointCloud adjoint_reconstruct(ArtModel& model, const PointCloud& x) {
    return cloud_from_node(adjoint_forward(model, x).output);
}

diff::NodePtr recon_loss(ArtModel& model, const PointCloud& x) {
    AdjointResult fwd = adjoint_forward(model, x);
    return chamfer_distance_diff(fwd.output, x);
}

diff::NodePtr rot_matrix_loss(const NodePtr& r1, const NodePtr& r2,
                              const RotationMatrix& r_tilde) {
    NodePtr rel = diff::matmul(diff::transpose2d(r2), r1);
    NodePtr diffm = diff::sub(rotation_node(r_tilde), rel);
    return diff::sum(diff::square(diffm));
}

diff::NodePtr rot_chamfer_loss(const PointCloud& x_tilde, const PointCloud& x,
                               const NodePtr& r1, const NodePtr& r2) {
    NodePtr rel = diff::matmul(diff::transpose2d(r2), r1);
    NodePtr mapped = diff::matmul(rel, cloud_node(x));
    // chamfer is symmetric in its arguments; gradient flows through `mapped`
    return chamfer_distance_diff(mapped, x_tilde);
}

ArtLoss art_loss(ArtModel& model, const PointCloud& x,
                 const std::vector<RotationMatrix>& rotations, const LossWeights& w,
                 RotationMode::Kind mode) {
    if (w.lambda1 < 0 || w.lambda2 < 0)
        throw ConfigError("loss weights must be non-negative");
    const std::size_t expected = (mode == RotationMode::Azimuthal) ? 1 : 3;
    if (rotations.size() != expected)
        throw ConfigError("art_loss: expected " + std::to_string(expected) +
                          " sampled rotation(s) for this mode, got " +
                          std::to_string(rotations.size()));

    NodePtr r1 = iterative_refine_node(model, x, model.cfg.refine_steps);
    NodePtr recon = chamfer_distance_diff(adjoint_output(model, x, r1), x);

    NodePtr rm_sum, rc_sum;
    for (const RotationMatrix& rt : rotations) {
        const PointCloud x_tilde = apply_rotation(rt, x);
        NodePtr r2 = iterative_refine_node(model, x_tilde, model.cfg.refine_steps);
        NodePtr rm = rot_matrix_loss(r1, r2, rt);
        NodePtr rc = rot_chamfer_loss(x_tilde, x, r1, r2);
        rm_sum = rm_sum ? diff::add(rm_sum, rm) : rm;
        rc_sum = rc_sum ? diff::add(rc_sum, rc) : rc;
    }
    const double inv = 1.0 / static_cast<double>(rotations.size());
    NodePtr rm_mean = diff::scale(rm_sum, inv);
    NodePtr rc_mean = diff::scale(rc_sum, inv);

    NodePtr total = diff::add(
        recon, diff::add(diff::scale(rm_mean, w.lambda1), diff::scale(rc_mean, w.lambda2)));

    ArtLoss out;
    out.total = total;
    out.breakdown.recon = recon->value();
    out.breakdown.rot_matrix = rm_mean->value();
    out.breakdown.rot_chamfer = rc_mean->value();
    out.breakdown.total = total->value();
    return out;
}

} // namespace art
