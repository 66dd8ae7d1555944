#include "art/evaluation.hpp"

#include "art/errors.hpp"
#include "art/kernels.hpp"
#include "art/util.hpp"

#include <algorithm>
#include <cmath>

namespace art {

std::vector<double> default_thresholds() {
    std::vector<double> t;
    for (int d = 5; d <= 180; d += 5) t.push_back(d);
    return t;
}

RotationMatrix canonical_orientation_residual(const RotationMatrix& predicted,
                                              const RotationMatrix& ground_truth) {
    return compose(predicted, ground_truth);
}

std::vector<RotationMatrix> symmetry_group(ShapeFamily family) {
    if (family == ShapeFamily::Glider) return {RotationMatrix::identity()};
    return {rot_z_deg(0), rot_z_deg(90), rot_z_deg(180), rot_z_deg(270)};
}

AlignmentReport pairwise_cdf(const std::string& method,
                             const std::vector<RotationMatrix>& residuals,
                             const std::vector<RotationMatrix>& symmetry,
                             const std::vector<double>& thresholds) {
    const int n = static_cast<int>(residuals.size());
    if (n < 2)
        throw InsufficientDataError("pairwise_cdf needs at least 2 shapes, got " +
                                    std::to_string(n));
    if (symmetry.empty()) throw ConfigError("pairwise_cdf: symmetry group must contain identity");

    std::vector<double> qs(static_cast<std::size_t>(n) * 9);
    for (int i = 0; i < n; ++i)
        std::copy(residuals[i].m.begin(), residuals[i].m.end(), qs.begin() + 9 * i);
    std::vector<double> sym(symmetry.size() * 9);
    for (std::size_t s = 0; s < symmetry.size(); ++s)
        std::copy(symmetry[s].m.begin(), symmetry[s].m.end(), sym.begin() + 9 * s);

    AlignmentReport rep;
    rep.method = method;
    rep.pair_distances_deg.resize(static_cast<std::size_t>(n) * (n - 1) / 2);
    kernels::pairwise_angles(qs.data(), n, sym.data(), static_cast<int>(symmetry.size()),
                             rep.pair_distances_deg.data());

    rep.thresholds_deg = thresholds;
    std::vector<double> sorted = rep.pair_distances_deg;
    std::sort(sorted.begin(), sorted.end());
    const double count = static_cast<double>(sorted.size());
    for (double th : thresholds) {
        const auto it = std::upper_bound(sorted.begin(), sorted.end(), th);
        rep.cdf.push_back(static_cast<double>(it - sorted.begin()) / count);
    }
    const std::size_t mid = sorted.size() / 2;
    rep.median_pairwise_deg = sorted.size() % 2 == 1
                                  ? sorted[mid]
                                  : 0.5 * (sorted[mid - 1] + sorted[mid]);
    return rep;
}

MethodEval identity_method(ArtModel* recon_model) {
    return {"identity", [](const PointCloud&) { return RotationMatrix::identity(); },
            recon_model};
}

MethodEval pca_method(ArtModel* recon_model) {
    return {"pca", [](const PointCloud& x) { return pca_align(x).rotation; }, recon_model};
}

MethodEval model_method(const std::string& label, ArtModel& model) {
    ArtModel* m = &model;
    return {label,
            [m](const PointCloud& x) {
                return iterative_refine(*m, x, m->cfg.refine_steps);
            },
            m};
}

namespace {

// d(x, Rᵀ·decode(R·x)) with the method's predicted rotation.
double method_chamfer(ArtModel& model, const PointCloud& x, const RotationMatrix& r) {
    const PointCloud rotated = apply_rotation(r, x);
    const PointCloud decoded = autoencode(model, rotated);
    return chamfer_distance(x, apply_rotation(transpose(r), decoded));
}

} // namespace

std::vector<ComparisonRow> run_comparison(const Dataset& ds, ShapeFamily family,
                                          const std::vector<MethodEval>& methods,
                                          const std::vector<double>& thresholds) {
    if (ds.applied_gt.size() != ds.clouds.size())
        throw ConfigError("run_comparison: dataset has no ground-truth rotations");
    const auto& test = ds.split.test;
    if (test.size() < 2)
        throw InsufficientDataError("run_comparison needs at least 2 test shapes");

    const auto symmetry = symmetry_group(family);
    std::vector<ComparisonRow> rows;
    for (const auto& m : methods) {
        std::vector<RotationMatrix> residuals;
        double chamfer_sum = 0.0;
        for (int idx : test) {
            const PointCloud& x = ds.clouds[idx];
            const RotationMatrix pred = m.predict(x);
            residuals.push_back(canonical_orientation_residual(pred, ds.applied_gt[idx]));
            if (m.recon_model) chamfer_sum += method_chamfer(*m.recon_model, x, pred);
        }
        ComparisonRow row;
        row.report = pairwise_cdf(m.label, residuals, symmetry, thresholds);
        if (m.recon_model)
            row.mean_test_chamfer = chamfer_sum / static_cast<double>(test.size());
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string alignment_cdf_csv(const std::vector<ComparisonRow>& rows) {
    std::string out = "method,threshold_deg,fraction\n";
    for (const auto& r : rows)
        for (std::size_t i = 0; i < r.report.thresholds_deg.size(); ++i) {
            out += r.report.method;
            out += ",";
            out += fmt_g9(r.report.thresholds_deg[i]);
            out += ",";
            out += fmt_g17(r.report.cdf[i]);
            out += "\n";
        }
    return out;
}

std::string summary_csv(const std::vector<ComparisonRow>& rows) {
    std::string out = "method,median_pairwise_deg,mean_test_chamfer\n";
    for (const auto& r : rows) {
        out += r.report.method;
        out += ",";
        out += fmt_g17(r.report.median_pairwise_deg);
        out += ",";
        if (r.mean_test_chamfer) out += fmt_g17(*r.mean_test_chamfer);
        out += "\n";
    }
    return out;
}

} // namespace art
