#pragma once

#include "art/data.hpp"
#include "art/losses.hpp"
#include "art/network.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace art {

struct TrainConfig {
    RotationMode::Kind mode = RotationMode::Azimuthal;
    Vec3 up_axis = {0, 0, 1};
    LossWeights weights;  // λ1 = 0.02; λ2 = 0.05 for quadtable runs, 0 otherwise
    double lr = 1e-3;
    int epochs = 300;
    int batch_size = 16;
    int refine_steps = 2;
    int latent_dim = 64;
    int decoder_points = 256;
    std::uint64_t seed = 0;
    bool art_enabled = true;
    // Fig.-8-style ablation switch: when off, λ1 and λ2 are treated as zero
    // and no rotations are sampled; the adjoint pipeline itself stays on.
    bool equivariance_enabled = true;
    std::vector<int> encoder_widths = {64, 128, 256};
    int head_hidden = 128;
    std::vector<int> decoder_hidden = {256, 512};

    void validate() const;
    ModelConfig model_config() const;
    RotationMode rotation_mode() const;
};

// Flat `key = value` text; '#' starts a comment; unknown keys are an error.
TrainConfig parse_train_config_text(const std::string& text, const std::string& origin);
TrainConfig parse_train_config(const std::string& path);
std::string format_train_config(const TrainConfig& cfg);

struct EpochStats {
    int epoch = 0;
    LossBreakdown train;
    // Validation uses rotation samples drawn once per run (not per epoch), so
    // epoch-to-epoch comparisons and best-checkpoint selection are stable.
    LossBreakdown val;
    double val_total = 0;  // == val.total; kept for the CSV column
};

struct TrainLog {
    std::vector<EpochStats> epochs;
    int best_epoch = 0;
    double wall_seconds = 0;     // not serialized: timing is run-dependent
    std::uint64_t rng_digest = 0;

    // epoch,recon,rot_matrix,rot_chamfer,total,val_total
    std::string to_csv() const;
};

struct TrainResult {
    ArtModel model;  // parameters restored to the best-validation epoch
    TrainLog log;
};

// One optimization step per batch: per shape, fresh sampled rotations (1 for
// Azimuthal, 3 for FullSO3) feed art_loss; backward; Adam over all
// parameters. Deterministic given the seed. The optional callback fires after
// every epoch (monitoring only; it does not influence the run).
using EpochCallback = std::function<void(const EpochStats&)>;
TrainResult train(const TrainConfig& cfg, const Dataset::TrainView& data,
                  const EpochCallback& on_epoch = {});

// The loss the first optimization step would see, without updating anything.
// Identity initialization makes the recon component of an ART run equal the
// plain auto-encoder's total, bit for bit, on the same seed.
LossBreakdown first_batch_loss(const TrainConfig& cfg, const Dataset::TrainView& data);

// Mean Chamfer between each cloud and its adjoint reconstruction over the
// given indices; no rotation sampling, deterministic.
double evaluate_reconstruction(ArtModel& model, const std::vector<PointCloud>& clouds,
                               const std::vector<int>& indices);

} // namespace art
