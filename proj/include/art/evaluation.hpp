#pragma once

#include "art/baselines.hpp"
#include "art/data.hpp"
#include "art/network.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace art {

struct AlignmentReport {
    std::string method;
    std::vector<double> pair_distances_deg;  // all T(T-1)/2 pairs
    std::vector<double> thresholds_deg;
    std::vector<double> cdf;  // fraction of pairs at or below each threshold
    double median_pairwise_deg = 0;
};

// 5, 10, ..., 180.
std::vector<double> default_thresholds();

// Q = R_pred · R_gt: the map from the family's generator-canonical frame to
// the method's canonical frame. A perfectly aligning method gives the same Q
// for every shape.
RotationMatrix canonical_orientation_residual(const RotationMatrix& predicted,
                                              const RotationMatrix& ground_truth);

// The rotations a family's shapes are invariant under: {I} for glider, the
// four up-axis quarter turns for quadtable. Pairwise residual distances are
// taken modulo this group, otherwise symmetric shapes would be penalized for
// picking a different-but-equivalent canonical frame.
std::vector<RotationMatrix> symmetry_group(ShapeFamily family);

AlignmentReport pairwise_cdf(const std::string& method,
                             const std::vector<RotationMatrix>& residuals,
                             const std::vector<RotationMatrix>& symmetry,
                             const std::vector<double>& thresholds);

// One method in a comparison run: a rotation predictor plus (optionally) the
// model whose auto-encoder defines its reconstruction error.
struct MethodEval {
    std::string label;
    std::function<RotationMatrix(const PointCloud&)> predict;
    ArtModel* recon_model = nullptr;
};

MethodEval identity_method(ArtModel* recon_model = nullptr);
MethodEval pca_method(ArtModel* recon_model = nullptr);
MethodEval model_method(const std::string& label, ArtModel& model);

struct ComparisonRow {
    AlignmentReport report;
    std::optional<double> mean_test_chamfer;
};

// Evaluates every method on the dataset's test split: residual-based
// pairwise alignment CDF plus, when a model is attached, the mean Chamfer of
// d(x, Rᵀ·decode(R·x)) with the method's own predicted R.
std::vector<ComparisonRow> run_comparison(const Dataset& ds, ShapeFamily family,
                                          const std::vector<MethodEval>& methods,
                                          const std::vector<double>& thresholds);

// method,threshold_deg,fraction
std::string alignment_cdf_csv(const std::vector<ComparisonRow>& rows);
// method,median_pairwise_deg,mean_test_chamfer
std::string summary_csv(const std::vector<ComparisonRow>& rows);

} // namespace art
