#pragma once

#include "art/geometry.hpp"
#include "art/rng.hpp"
#include "art/rotrep.hpp"
#include "art/tensor.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace art {

struct DenseLayer {
    diff::Parameter w;  // [out×in]
    diff::Parameter b;  // [out]

    DenseLayer(const std::string& name, int in, int out, Rng rng, bool zero_init = false);
};

struct ModelConfig {
    std::vector<int> encoder_widths = {64, 128, 256};  // shared per-point MLP after the 3 inputs
    int head_hidden = 128;
    std::vector<int> decoder_hidden = {256, 512};
    int latent_dim = 64;
    int decoder_points = 256;
    int refine_steps = 2;

    void validate() const;
};

// Rotation predictor (point-set encoder + 6D head) plus the downstream
// auto-encoder. The rotation head's final layer starts at exactly zero, so a
// fresh model predicts the identity rotation for every input.
struct ArtModel {
    ModelConfig cfg;
    std::vector<DenseLayer> rot_mlp;   // 3 -> encoder_widths
    std::vector<DenseLayer> rot_head;  // encoder_widths.back() -> head_hidden -> 6
    std::vector<DenseLayer> ae_mlp;    // 3 -> encoder_widths
    DenseLayer ae_latent;              // encoder_widths.back() -> latent_dim
    std::vector<DenseLayer> ae_decoder;  // latent_dim -> decoder_hidden -> 3*decoder_points

    ArtModel(const ModelConfig& cfg, std::uint64_t seed);
    ArtModel(const ArtModel&) = delete;
    ArtModel& operator=(const ArtModel&) = delete;
    ArtModel(ArtModel&&) = default;
    ArtModel& operator=(ArtModel&&) = default;

    std::vector<diff::Parameter*> parameters();
    std::vector<diff::Parameter*> rot_parameters();
    std::vector<diff::Parameter*> ae_parameters();
    std::size_t rot_param_count();
    std::size_t ae_param_count();
    std::int64_t step_count();

    // Full-precision copy of all parameter values, for best-checkpoint keeping.
    std::vector<std::vector<double>> snapshot();
    void restore(const std::vector<std::vector<double>>& snap);
};

// Encoder features -> 6D (+ identity offset) -> rotation matrix, [3×3] node.
// Permutation invariant in the point dimension.
diff::NodePtr predict_rotation_node(ArtModel& model, const diff::NodePtr& x);
RotationMatrix predict_rotation(ArtModel& model, const PointCloud& x);

// R ← I; k times: R ← predict(R·x)·R. k = 1 reduces to predict_rotation.
diff::NodePtr iterative_refine_node(ArtModel& model, const PointCloud& x, int k);
RotationMatrix iterative_refine(ArtModel& model, const PointCloud& x, int k);

// Encoder -> latent -> fixed-size point decoder, [3×M] node.
diff::NodePtr autoencode_node(ArtModel& model, const diff::NodePtr& x);
PointCloud autoencode(ArtModel& model, const PointCloud& x);

void save_model(ArtModel& model, const std::string& path);
ArtModel load_model(const std::string& path);

} // namespace art
