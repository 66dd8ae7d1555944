#include "art/network.hpp"

#include "art/checkpoint.hpp"
#include "art/errors.hpp"

#include <cmath>

namespace art {

using diff::NodePtr;

DenseLayer::DenseLayer(const std::string& name, int in, int out, Rng rng, bool zero_init)
    : w(name + ".w",
        {out, in},
        [&] {
            std::vector<double> init(static_cast<std::size_t>(out) * in, 0.0);
            if (!zero_init) {
                const double sd = std::sqrt(2.0 / in);  // He init for relu stacks
                for (auto& v : init) v = sd * rng.normal();
            }
            return init;
        }()),
      b(name + ".b", {out}, std::vector<double>(out, 0.0)) {}

void ModelConfig::validate() const {
    if (encoder_widths.empty()) throw ConfigError("encoder_widths must not be empty");
    for (int wi : encoder_widths)
        if (wi < 1) throw ConfigError("encoder widths must be positive");
    if (head_hidden < 1) throw ConfigError("head_hidden must be positive");
    for (int wi : decoder_hidden)
        if (wi < 1) throw ConfigError("decoder widths must be positive");
    if (latent_dim < 1) throw ConfigError("latent_dim must be positive");
    if (decoder_points < 1) throw ConfigError("decoder_points must be positive");
    if (refine_steps < 1) throw ConfigError("refine_steps must be positive");
}

namespace {

std::vector<DenseLayer> make_mlp(const std::string& name, int in,
                                 const std::vector<int>& widths, const Rng& rng) {
    std::vector<DenseLayer> layers;
    layers.reserve(widths.size());
    int prev = in;
    for (std::size_t i = 0; i < widths.size(); ++i) {
        layers.emplace_back(name + "." + std::to_string(i), prev, widths[i],
                            rng.fork(name + "." + std::to_string(i)));
        prev = widths[i];
    }
    return layers;
}

std::vector<DenseLayer> make_head(const std::string& name, int in, int hidden, int out,
                                  const Rng& rng, bool zero_final) {
    std::vector<DenseLayer> layers;
    layers.emplace_back(name + ".0", in, hidden, rng.fork(name + ".0"));
    layers.emplace_back(name + ".1", hidden, out, rng.fork(name + ".1"), zero_final);
    return layers;
}

// Shared per-point MLP: relu(W h + b) per layer, applied columnwise.
NodePtr shared_mlp(const std::vector<DenseLayer>& layers, NodePtr x) {
    for (const auto& l : layers)
        x = diff::relu(diff::add_colwise(diff::matmul(l.w.node, x), l.b.node));
    return x;
}

// Fully connected stack on a feature vector; relu between layers, linear last.
NodePtr dense_stack(const std::vector<DenseLayer>& layers, NodePtr h) {
    for (std::size_t i = 0; i < layers.size(); ++i) {
        h = diff::add(diff::matmul(layers[i].w.node, h), layers[i].b.node);
        if (i + 1 < layers.size()) h = diff::relu(h);
    }
    return h;
}

std::size_t count(const std::vector<diff::Parameter*>& ps) {
    std::size_t n = 0;
    for (auto* p : ps) n += p->size();
    return n;
}

} // namespace

ArtModel::ArtModel(const ModelConfig& cfg_, std::uint64_t seed)
    : cfg(cfg_),
      rot_mlp(make_mlp("rot_mlp", 3, cfg_.encoder_widths, Rng(seed))),
      rot_head(make_head("rot_head", cfg_.encoder_widths.back(), cfg_.head_hidden, 6,
                         Rng(seed), /*zero_final=*/true)),
      ae_mlp(make_mlp("ae_mlp", 3, cfg_.encoder_widths, Rng(seed))),
      ae_latent("ae_latent", cfg_.encoder_widths.back(), cfg_.latent_dim,
                Rng(seed).fork("ae_latent")),
      ae_decoder([&] {
          std::vector<int> widths = cfg_.decoder_hidden;
          widths.push_back(3 * cfg_.decoder_points);
          return make_mlp("ae_decoder", cfg_.latent_dim, widths, Rng(seed));
      }()) {
    cfg.validate();
}

std::vector<diff::Parameter*> ArtModel::rot_parameters() {
    std::vector<diff::Parameter*> ps;
    for (auto& l : rot_mlp) {
        ps.push_back(&l.w);
        ps.push_back(&l.b);
    }
    for (auto& l : rot_head) {
        ps.push_back(&l.w);
        ps.push_back(&l.b);
    }
    return ps;
}

std::vector<diff::Parameter*> ArtModel::ae_parameters() {
    std::vector<diff::Parameter*> ps;
    for (auto& l : ae_mlp) {
        ps.push_back(&l.w);
        ps.push_back(&l.b);
    }
    ps.push_back(&ae_latent.w);
    ps.push_back(&ae_latent.b);
    for (auto& l : ae_decoder) {
        ps.push_back(&l.w);
        ps.push_back(&l.b);
    }
    return ps;
}

std::vector<diff::Parameter*> ArtModel::parameters() {
    auto ps = rot_parameters();
    auto ae = ae_parameters();
    ps.insert(ps.end(), ae.begin(), ae.end());
    return ps;
}

std::size_t ArtModel::rot_param_count() { return count(rot_parameters()); }
std::size_t ArtModel::ae_param_count() { return count(ae_parameters()); }

std::int64_t ArtModel::step_count() {
    auto ps = parameters();
    return ps.empty() ? 0 : ps.front()->step_count;
}

std::vector<std::vector<double>> ArtModel::snapshot() {
    std::vector<std::vector<double>> snap;
    for (auto* p : parameters()) snap.push_back(p->node->data);
    return snap;
}

void ArtModel::restore(const std::vector<std::vector<double>>& snap) {
    auto ps = parameters();
    if (snap.size() != ps.size()) throw Error("snapshot does not match model layout");
    for (std::size_t i = 0; i < ps.size(); ++i) {
        if (snap[i].size() != ps[i]->node->data.size())
            throw Error("snapshot tensor size mismatch at '" + ps[i]->name + "'");
        ps[i]->node->data = snap[i];
    }
}

NodePtr predict_rotation_node(ArtModel& model, const NodePtr& x) {
    NodePtr feat = diff::max_over_points(shared_mlp(model.rot_mlp, x));
    NodePtr six = dense_stack(model.rot_head, feat);
    const Rot6D off = identity_offset();
    six = diff::add(six, diff::leaf({6}, {off.v[0], off.v[1], off.v[2],
                                          off.v[3], off.v[4], off.v[5]}));
    return rot6d_to_matrix(six);
}

RotationMatrix predict_rotation(ArtModel& model, const PointCloud& x) {
    return rotation_from_node(predict_rotation_node(model, cloud_node(x)));
}

NodePtr iterative_refine_node(ArtModel& model, const PointCloud& x, int k) {
    if (k < 1) throw ConfigError("iterative_refine: k must be positive");
    NodePtr total = rotation_node(RotationMatrix::identity());
    NodePtr cloud = cloud_node(x);
    for (int i = 0; i < k; ++i) {
        NodePtr rotated = diff::matmul(total, cloud);
        NodePtr step = predict_rotation_node(model, rotated);
        total = diff::matmul(step, total);
    }
    return total;
}

RotationMatrix iterative_refine(ArtModel& model, const PointCloud& x, int k) {
    return rotation_from_node(iterative_refine_node(model, x, k));
}

NodePtr autoencode_node(ArtModel& model, const NodePtr& x) {
    NodePtr feat = diff::max_over_points(shared_mlp(model.ae_mlp, x));
    NodePtr z = diff::add(diff::matmul(model.ae_latent.w.node, feat), model.ae_latent.b.node);
    NodePtr out = dense_stack(model.ae_decoder, z);
    return diff::reshape(out, {3, model.cfg.decoder_points});
}

PointCloud autoencode(ArtModel& model, const PointCloud& x) {
    return cloud_from_node(autoencode_node(model, cloud_node(x)));
}

void save_model(ArtModel& model, const std::string& path) {
    Checkpoint ck;
    ck.meta["latent_dim"] = model.cfg.latent_dim;
    ck.meta["decoder_points"] = model.cfg.decoder_points;
    ck.meta["refine_steps"] = model.cfg.refine_steps;
    ck.meta["step_count"] = model.step_count();
    for (auto* p : model.parameters()) ck.add(p->name, p->node->shape, p->node->data);
    ck.save(path);
}

ArtModel load_model(const std::string& path) {
    Checkpoint ck = Checkpoint::load(path);
    ModelConfig cfg;
    cfg.latent_dim = static_cast<int>(ck.meta_or("latent_dim", 64));
    cfg.decoder_points = static_cast<int>(ck.meta_or("decoder_points", 256));
    cfg.refine_steps = static_cast<int>(ck.meta_or("refine_steps", 2));
    cfg.encoder_widths.clear();
    for (int i = 0;; ++i) {
        const auto* e = ck.find("rot_mlp." + std::to_string(i) + ".w");
        if (!e) break;
        cfg.encoder_widths.push_back(e->shape[0]);
    }
    cfg.head_hidden = ck.require("rot_head.0.w").shape[0];
    cfg.decoder_hidden.clear();
    for (int i = 0;; ++i) {
        const auto* e = ck.find("ae_decoder." + std::to_string(i) + ".w");
        if (!e) break;
        cfg.decoder_hidden.push_back(e->shape[0]);
    }
    if (cfg.decoder_hidden.empty() ||
        cfg.decoder_hidden.back() != 3 * cfg.decoder_points)
        throw ParseError("checkpoint '" + path + "': decoder output does not match decoder_points");
    cfg.decoder_hidden.pop_back();

    ArtModel model(cfg, /*seed=*/0);
    const auto step = ck.meta_or("step_count", 0);
    for (auto* p : model.parameters()) {
        const auto& e = ck.require(p->name);
        if (e.shape != p->node->shape)
            throw ParseError("checkpoint '" + path + "': tensor '" + p->name +
                             "' has shape " + diff::shape_str(e.shape) + ", expected " +
                             diff::shape_str(p->node->shape));
        p->node->data = e.data;
        p->step_count = step;
    }
    return model;
}

} // namespace art
