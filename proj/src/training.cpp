#include "art/training.hpp"

#include "art/errors.hpp"
#include "art/util.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

namespace art {

void TrainConfig::validate() const {
    if (weights.lambda1 < 0 || weights.lambda2 < 0)
        throw ConfigError("lambda weights must be non-negative");
    if (!(lr > 0)) throw ConfigError("lr must be positive");
    if (epochs < 1) throw ConfigError("epochs must be at least 1");
    if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
    model_config().validate();
}

ModelConfig TrainConfig::model_config() const {
    ModelConfig mc;
    mc.encoder_widths = encoder_widths;
    mc.head_hidden = head_hidden;
    mc.decoder_hidden = decoder_hidden;
    mc.latent_dim = latent_dim;
    mc.decoder_points = decoder_points;
    mc.refine_steps = refine_steps;
    return mc;
}

RotationMode TrainConfig::rotation_mode() const {
    return mode == RotationMode::Azimuthal ? RotationMode::azimuthal(up_axis)
                                           : RotationMode::full_so3();
}

namespace {

bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("config key '" + key + "': expected true/false, got '" + v + "'");
}

std::vector<int> parse_int_list(const std::string& v, const std::string& key) {
    std::vector<int> out;
    for (const auto& part : split(v, ',')) {
        const std::string t = trim(part);
        if (t.empty()) continue;
        try {
            out.push_back(std::stoi(t));
        } catch (...) {
            throw ConfigError("config key '" + key + "': bad integer '" + t + "'");
        }
    }
    if (out.empty()) throw ConfigError("config key '" + key + "': empty list");
    return out;
}

std::string join_ints(const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(v[i]);
    }
    return s;
}

} // namespace

TrainConfig parse_train_config_text(const std::string& text, const std::string& origin) {
    TrainConfig cfg;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const std::string t = trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ParseError(origin + ":" + std::to_string(line_no) +
                             ": expected 'key = value', got '" + t + "'");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        try {
            if (key == "mode") {
                if (value == "azimuthal")
                    cfg.mode = RotationMode::Azimuthal;
                else if (value == "so3")
                    cfg.mode = RotationMode::FullSO3;
                else
                    throw ConfigError("mode must be 'azimuthal' or 'so3', got '" + value + "'");
            } else if (key == "up_axis") {
                auto parts = split(value, ',');
                if (parts.size() != 3) throw ConfigError("up_axis needs 3 comma-separated values");
                for (int i = 0; i < 3; ++i) cfg.up_axis[i] = std::stod(trim(parts[i]));
            } else if (key == "lambda1") {
                cfg.weights.lambda1 = std::stod(value);
            } else if (key == "lambda2") {
                cfg.weights.lambda2 = std::stod(value);
            } else if (key == "lr") {
                cfg.lr = std::stod(value);
            } else if (key == "epochs") {
                cfg.epochs = std::stoi(value);
            } else if (key == "batch_size") {
                cfg.batch_size = std::stoi(value);
            } else if (key == "refine_steps") {
                cfg.refine_steps = std::stoi(value);
            } else if (key == "latent_dim") {
                cfg.latent_dim = std::stoi(value);
            } else if (key == "decoder_points") {
                cfg.decoder_points = std::stoi(value);
            } else if (key == "seed") {
                cfg.seed = std::stoull(value);
            } else if (key == "art_enabled") {
                cfg.art_enabled = parse_bool(value, key);
            } else if (key == "equivariance_enabled") {
                cfg.equivariance_enabled = parse_bool(value, key);
            } else if (key == "encoder_widths") {
                cfg.encoder_widths = parse_int_list(value, key);
            } else if (key == "head_hidden") {
                cfg.head_hidden = std::stoi(value);
            } else if (key == "decoder_hidden") {
                cfg.decoder_hidden = parse_int_list(value, key);
            } else {
                throw ConfigError("unknown config key '" + key + "'");
            }
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception&) {
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": bad value for '" +
                              key + "': '" + value + "'");
        }
    }
    cfg.validate();
    return cfg;
}

TrainConfig parse_train_config(const std::string& path) {
    return parse_train_config_text(read_file(path), path);
}

std::string format_train_config(const TrainConfig& cfg) {
    std::ostringstream out;
    out << "mode = " << (cfg.mode == RotationMode::Azimuthal ? "azimuthal" : "so3") << "\n";
    out << "up_axis = " << fmt_g17(cfg.up_axis[0]) << "," << fmt_g17(cfg.up_axis[1]) << ","
        << fmt_g17(cfg.up_axis[2]) << "\n";
    out << "lambda1 = " << fmt_g17(cfg.weights.lambda1) << "\n";
    out << "lambda2 = " << fmt_g17(cfg.weights.lambda2) << "\n";
    out << "lr = " << fmt_g17(cfg.lr) << "\n";
    out << "epochs = " << cfg.epochs << "\n";
    out << "batch_size = " << cfg.batch_size << "\n";
    out << "refine_steps = " << cfg.refine_steps << "\n";
    out << "latent_dim = " << cfg.latent_dim << "\n";
    out << "decoder_points = " << cfg.decoder_points << "\n";
    out << "seed = " << cfg.seed << "\n";
    out << "art_enabled = " << (cfg.art_enabled ? "true" : "false") << "\n";
    out << "equivariance_enabled = " << (cfg.equivariance_enabled ? "true" : "false") << "\n";
    out << "encoder_widths = " << join_ints(cfg.encoder_widths) << "\n";
    out << "head_hidden = " << cfg.head_hidden << "\n";
    out << "decoder_hidden = " << join_ints(cfg.decoder_hidden) << "\n";
    return out.str();
}

std::string TrainLog::to_csv() const {
    std::string out = "epoch,recon,rot_matrix,rot_chamfer,total,val_total\n";
    for (const auto& e : epochs) {
        out += std::to_string(e.epoch);
        out += ",";
        out += fmt_g17(e.train.recon);
        out += ",";
        out += fmt_g17(e.train.rot_matrix);
        out += ",";
        out += fmt_g17(e.train.rot_chamfer);
        out += ",";
        out += fmt_g17(e.train.total);
        out += ",";
        out += fmt_g17(e.val_total);
        out += "\n";
    }
    return out;
}

namespace {

class Trainer {
public:
    Trainer(const TrainConfig& cfg, const Dataset::TrainView& data)
        : cfg_(cfg),
          data_(data),
          model_(cfg.model_config(), cfg.seed),
          rng_order_(Rng(cfg.seed).fork("batch-order")),
          rng_rot_(Rng(cfg.seed).fork("rotations")),
          rot_mode_(cfg.rotation_mode()) {
        cfg_.validate();
        if (!data.clouds || !data.split) throw ConfigError("train: missing dataset");
        if (data.split->train.empty()) throw ConfigError("train: training split is empty");
        if (data.split->val.empty()) throw ConfigError("train: validation split is empty");
        params_ = model_.parameters();
        if (cfg_.art_enabled && cfg_.equivariance_enabled) {
            // one fixed rotation set per validation shape for the whole run
            Rng vr = Rng(cfg.seed).fork("val-rotations");
            const std::size_t per = cfg_.mode == RotationMode::Azimuthal ? 1 : 3;
            for (std::size_t i = 0; i < data.split->val.size(); ++i) {
                std::vector<RotationMatrix> rots(per);
                for (auto& r : rots) r = sample_rotation(rot_mode_, vr);
                val_rots_.push_back(std::move(rots));
            }
        }
    }

    std::vector<int> epoch_order() {
        std::vector<int> order = data_.split->train;
        rng_order_.shuffle(order);
        return order;
    }

    LossBreakdown step(const std::vector<int>& batch, bool apply_update) {
        diff::zero_grad(params_);
        const double inv = 1.0 / static_cast<double>(batch.size());
        LossBreakdown acc;
        for (int idx : batch) {
            const PointCloud& x = (*data_.clouds)[idx];
            if (!cfg_.art_enabled) {
                diff::NodePtr out = autoencode_node(model_, cloud_node(x));
                diff::NodePtr loss = chamfer_distance_diff(out, x);
                acc.recon += loss->value();
                acc.total += loss->value();
                if (apply_update) diff::backward(diff::scale(loss, inv));
            } else if (!cfg_.equivariance_enabled) {
                diff::NodePtr loss = recon_loss(model_, x);
                acc.recon += loss->value();
                acc.total += loss->value();
                if (apply_update) diff::backward(diff::scale(loss, inv));
            } else {
                std::vector<RotationMatrix> rots(cfg_.mode == RotationMode::Azimuthal ? 1 : 3);
                for (auto& r : rots) r = sample_rotation(rot_mode_, rng_rot_);
                ArtLoss al = art_loss(model_, x, rots, cfg_.weights, cfg_.mode);
                acc.recon += al.breakdown.recon;
                acc.rot_matrix += al.breakdown.rot_matrix;
                acc.rot_chamfer += al.breakdown.rot_chamfer;
                acc.total += al.breakdown.total;
                if (apply_update) diff::backward(diff::scale(al.total, inv));
            }
        }
        acc.recon *= inv;
        acc.rot_matrix *= inv;
        acc.rot_chamfer *= inv;
        acc.total *= inv;
        if (!std::isfinite(acc.total))
            throw DivergenceError("non-finite training loss at epoch " +
                                  std::to_string(epoch_) + ", step " + std::to_string(step_));
        if (apply_update) {
            diff::AdamConfig adam;
            adam.lr = cfg_.lr;
            diff::adam_step(params_, adam);
            ++step_;
        }
        return acc;
    }

    LossBreakdown validation_loss() {
        LossBreakdown acc;
        const auto& val = data_.split->val;
        for (std::size_t vi = 0; vi < val.size(); ++vi) {
            const PointCloud& x = (*data_.clouds)[val[vi]];
            if (cfg_.art_enabled && cfg_.equivariance_enabled) {
                ArtLoss al = art_loss(model_, x, val_rots_[vi], cfg_.weights, cfg_.mode);
                acc.recon += al.breakdown.recon;
                acc.rot_matrix += al.breakdown.rot_matrix;
                acc.rot_chamfer += al.breakdown.rot_chamfer;
                acc.total += al.breakdown.total;
            } else {
                const double recon =
                    chamfer_distance(x, adjoint_reconstruct(model_, x));
                acc.recon += recon;
                acc.total += recon;
            }
        }
        const double inv = 1.0 / static_cast<double>(val.size());
        acc.recon *= inv;
        acc.rot_matrix *= inv;
        acc.rot_chamfer *= inv;
        acc.total *= inv;
        return acc;
    }

    void set_epoch(int e) { epoch_ = e; }
    ArtModel& model() { return model_; }
    std::uint64_t rng_digest() const {
        return rng_order_.state_digest() ^ (rng_rot_.state_digest() * 0x9e3779b97f4a7c15ull);
    }

private:
    TrainConfig cfg_;
    Dataset::TrainView data_;
    ArtModel model_;
    std::vector<diff::Parameter*> params_;
    Rng rng_order_;
    Rng rng_rot_;
    RotationMode rot_mode_;
    std::vector<std::vector<RotationMatrix>> val_rots_;
    int epoch_ = 0;
    long step_ = 0;
};

} // namespace

TrainResult train(const TrainConfig& cfg, const Dataset::TrainView& data,
                  const EpochCallback& on_epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    Trainer trainer(cfg, data);

    TrainLog log;
    double best_val = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> best_snapshot;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        trainer.set_epoch(epoch);
        const std::vector<int> order = trainer.epoch_order();
        LossBreakdown epoch_acc;
        std::size_t n_shapes = 0;
        for (std::size_t pos = 0; pos < order.size(); pos += cfg.batch_size) {
            std::vector<int> batch(order.begin() + pos,
                                   order.begin() + std::min(order.size(),
                                                            pos + cfg.batch_size));
            const LossBreakdown b = trainer.step(batch, /*apply_update=*/true);
            const double w = static_cast<double>(batch.size());
            epoch_acc.recon += b.recon * w;
            epoch_acc.rot_matrix += b.rot_matrix * w;
            epoch_acc.rot_chamfer += b.rot_chamfer * w;
            epoch_acc.total += b.total * w;
            n_shapes += batch.size();
        }
        const double inv = 1.0 / static_cast<double>(n_shapes);
        epoch_acc.recon *= inv;
        epoch_acc.rot_matrix *= inv;
        epoch_acc.rot_chamfer *= inv;
        epoch_acc.total *= inv;

        const LossBreakdown val = trainer.validation_loss();
        log.epochs.push_back({epoch, epoch_acc, val, val.total});
        if (on_epoch) on_epoch(log.epochs.back());
        if (val.total < best_val) {
            best_val = val.total;
            best_snapshot = trainer.model().snapshot();
            log.best_epoch = epoch;
        }
    }
    if (!best_snapshot.empty()) trainer.model().restore(best_snapshot);
    log.rng_digest = trainer.rng_digest();
    log.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {std::move(trainer.model()), std::move(log)};
}

LossBreakdown first_batch_loss(const TrainConfig& cfg, const Dataset::TrainView& data) {
    Trainer trainer(cfg, data);
    const std::vector<int> order = trainer.epoch_order();
    std::vector<int> batch(order.begin(),
                           order.begin() + std::min<std::size_t>(order.size(), cfg.batch_size));
    return trainer.step(batch, /*apply_update=*/false);
}

double evaluate_reconstruction(ArtModel& model, const std::vector<PointCloud>& clouds,
                               const std::vector<int>& indices) {
    if (indices.empty()) throw ConfigError("evaluate_reconstruction: empty index list");
    double s = 0.0;
    for (int idx : indices)
        s += chamfer_distance(clouds[idx], adjoint_reconstruct(model, clouds[idx]));
    return s / static_cast<double>(indices.size());
}

} // namespace art
