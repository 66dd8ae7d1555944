// art — self-supervised canonical alignment for 3D point clouds.
//
// Subcommands mirror the experiment lifecycle: gen (synthetic corpus), train
// (ART or plain auto-encoder), align (canonicalize clouds with a checkpoint),
// eval (alignment CDF + reconstruction comparison), ablate (paired run with
// and without the equivariance losses).

#include "art/baselines.hpp"
#include "art/data.hpp"
#include "art/errors.hpp"
#include "art/evaluation.hpp"
#include "art/network.hpp"
#include "art/training.hpp"
#include "art/util.hpp"

#include <CLI11.hpp>

#include <deque>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;

namespace {

constexpr const char* kArtifactVersion = "1.0";

std::string meta_text(const std::string& command,
                      const std::vector<std::pair<std::string, std::string>>& kv) {
    std::ostringstream out;
    out << "artifact_version " << kArtifactVersion << "\n";
    out << "command " << command << "\n";
    for (const auto& [k, v] : kv) out << k << " " << v << "\n";
    return out.str();
}

// Validated up front so a long run cannot fail on an unwritable destination
// hours later.
std::string resolve_out(std::string out) {
    if (out.empty()) {
        if (const char* root = std::getenv("ART_OUT_ROOT"); root && *root)
            out = root;
        else
            throw art::ConfigError("no output directory: pass --out or set ART_OUT_ROOT");
    }
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw art::ConfigError("cannot create output directory '" + out + "': " + ec.message());
    return out;
}

struct GenArgs {
    std::string family = "glider";
    int count = 0;  // 0: family default (500 glider, 300 quadtable)
    int points = 256;
    std::uint64_t seed = 0;
    std::string mode = "azimuthal";
    std::string out;
};

void run_gen(const GenArgs& a) {
    const std::string out = resolve_out(a.out);
    const art::ShapeFamily family = art::family_from_string(a.family);
    const int count = a.count > 0 ? a.count
                                  : (family == art::ShapeFamily::Glider ? 500 : 300);
    auto canonical = art::generate(family, count, a.points, a.seed);
    art::Dataset ds;
    if (a.mode == "none") {
        ds = art::no_perturb(canonical, a.seed);
    } else if (a.mode == "azimuthal") {
        ds = art::perturb(canonical, art::RotationMode::azimuthal(), a.seed);
    } else if (a.mode == "so3") {
        ds = art::perturb(canonical, art::RotationMode::full_so3(), a.seed);
    } else {
        throw art::ConfigError("unknown mode '" + a.mode + "' (azimuthal|so3|none)");
    }
    art::save_dataset(out, family, ds);
    art::atomic_write((fs::path(out) / "run_meta.txt").string(),
                      meta_text("gen", {{"family", a.family},
                                        {"count", std::to_string(count)},
                                        {"points", std::to_string(a.points)},
                                        {"mode", a.mode},
                                        {"seed", std::to_string(a.seed)}}));
    std::cout << "wrote " << count << " " << a.family << " shapes to " << out << "\n";
}

struct TrainArgs {
    std::string config;
    std::string data;
    std::string out;
    std::optional<std::uint64_t> seed;
};

art::EpochCallback progress_every(int stride) {
    return [stride](const art::EpochStats& e) {
        if (e.epoch % stride == 0)
            std::cout << "epoch " << e.epoch << ": train " << e.train.total << ", val "
                      << e.val_total << "\n"
                      << std::flush;
    };
}

void run_train(const TrainArgs& a) {
    const std::string out = resolve_out(a.out);
    art::TrainConfig cfg = art::parse_train_config(a.config);
    if (a.seed) cfg.seed = *a.seed;
    art::Dataset ds = art::load_dataset(a.data);
    art::TrainResult result = art::train(cfg, ds.train_view(), progress_every(50));
    art::save_model(result.model, (fs::path(out) / "model.ckpt").string());
    art::atomic_write((fs::path(out) / "trainlog.csv").string(), result.log.to_csv());
    art::atomic_write((fs::path(out) / "run_meta.txt").string(),
                      meta_text("train", {{"data", a.data},
                                          {"config", art::format_train_config(cfg)},
                                          {"best_epoch", std::to_string(result.log.best_epoch)}}));
    std::cout << "trained " << cfg.epochs << " epochs, best val "
              << result.log.epochs[result.log.best_epoch].val_total << " at epoch "
              << result.log.best_epoch << ", wrote " << out << "/model.ckpt\n";
}

struct AlignArgs {
    std::string checkpoint;
    std::string input;
    std::string out;
};

void run_align(const AlignArgs& a) {
    const std::string out = resolve_out(a.out);
    art::ArtModel model = art::load_model(a.checkpoint);
    std::vector<fs::path> files;
    if (fs::is_directory(a.input)) {
        for (const auto& e : fs::directory_iterator(a.input))
            if (e.is_regular_file() && e.path().extension() == ".obj") files.push_back(e.path());
        std::sort(files.begin(), files.end());
    } else {
        files.push_back(a.input);
    }
    if (files.empty()) throw art::EmptyInputError("no .obj files under '" + a.input + "'");
    for (const auto& f : files) {
        const art::PointCloud x = art::center_and_normalize(art::load_pointcloud(f.string())).cloud;
        const art::RotationMatrix r = art::iterative_refine(model, x, model.cfg.refine_steps);
        std::string rot_text;
        for (int i = 0; i < 9; ++i) {
            rot_text += art::fmt_g17(r.m[i]);
            rot_text += (i % 3 == 2) ? "\n" : " ";
        }
        const std::string stem = f.stem().string();
        art::atomic_write((fs::path(out) / (stem + ".rot.txt")).string(), rot_text);
        art::save_pointcloud((fs::path(out) / (stem + ".canonical.obj")).string(),
                             art::apply_rotation(r, x));
    }
    art::atomic_write((fs::path(out) / "run_meta.txt").string(),
                      meta_text("align", {{"checkpoint", a.checkpoint},
                                          {"input", a.input},
                                          {"count", std::to_string(files.size())}}));
    std::cout << "aligned " << files.size() << " cloud(s) into " << out << "\n";
}

struct EvalArgs {
    std::string data;
    std::string out;
    std::string methods = "identity,pca";
    std::vector<std::string> checkpoints;  // label=path
};

void run_eval(const EvalArgs& a) {
    const std::string out = resolve_out(a.out);
    art::Dataset ds = art::load_dataset(a.data);
    const art::ShapeFamily family = art::dataset_family(a.data);

    std::deque<art::ArtModel> models;
    std::map<std::string, art::ArtModel*> by_label;
    for (const auto& spec : a.checkpoints) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos)
            throw art::ConfigError("--checkpoint expects label=path, got '" + spec + "'");
        const std::string label = spec.substr(0, eq);
        models.push_back(art::load_model(spec.substr(eq + 1)));
        by_label[label] = &models.back();
    }
    art::ArtModel* ae = by_label.count("ae") ? by_label["ae"] : nullptr;

    std::vector<art::MethodEval> evals;
    for (const auto& raw : art::split(a.methods, ',')) {
        const std::string name = art::trim(raw);
        if (name.empty()) continue;
        if (name == "identity") {
            evals.push_back(art::identity_method(ae));
        } else if (name == "pca") {
            evals.push_back(art::pca_method(ae));
        } else if (by_label.count(name)) {
            evals.push_back(art::model_method(name, *by_label[name]));
        } else {
            throw art::ConfigError("method '" + name + "' has no checkpoint (use --checkpoint " +
                                   name + "=path)");
        }
    }
    if (evals.empty()) throw art::ConfigError("no methods to evaluate");

    auto rows = art::run_comparison(ds, family, evals, art::default_thresholds());
    art::atomic_write((fs::path(out) / "alignment_cdf.csv").string(),
                      art::alignment_cdf_csv(rows));
    art::atomic_write((fs::path(out) / "summary.csv").string(), art::summary_csv(rows));
    std::vector<std::pair<std::string, std::string>> kv = {{"data", a.data},
                                                           {"methods", a.methods}};
    for (const auto& spec : a.checkpoints) kv.emplace_back("checkpoint", spec);
    art::atomic_write((fs::path(out) / "run_meta.txt").string(), meta_text("eval", kv));
    std::cout << "evaluated " << rows.size() << " method(s), wrote " << out
              << "/alignment_cdf.csv and summary.csv\n";
}

struct AblateArgs {
    std::string config;
    std::string data;
    std::string out;
};

void run_ablate(const AblateArgs& a) {
    const std::string out = resolve_out(a.out);
    art::TrainConfig cfg = art::parse_train_config(a.config);
    cfg.art_enabled = true;
    art::Dataset ds = art::load_dataset(a.data);
    const art::ShapeFamily family = art::dataset_family(a.data);

    art::TrainConfig cfg_art = cfg;
    cfg_art.equivariance_enabled = true;
    art::TrainResult with_equiv = art::train(cfg_art, ds.train_view(), progress_every(50));
    art::save_model(with_equiv.model, (fs::path(out) / "model_art.ckpt").string());
    art::atomic_write((fs::path(out) / "trainlog_art.csv").string(), with_equiv.log.to_csv());

    art::TrainConfig cfg_ab = cfg;
    cfg_ab.equivariance_enabled = false;
    art::TrainResult without_equiv = art::train(cfg_ab, ds.train_view(), progress_every(50));
    art::save_model(without_equiv.model, (fs::path(out) / "model_noequiv.ckpt").string());
    art::atomic_write((fs::path(out) / "trainlog_noequiv.csv").string(),
                      without_equiv.log.to_csv());

    std::vector<art::MethodEval> evals = {
        art::model_method("art", with_equiv.model),
        art::model_method("art_noequiv", without_equiv.model)};
    auto rows = art::run_comparison(ds, family, evals, art::default_thresholds());
    art::atomic_write((fs::path(out) / "alignment_cdf.csv").string(),
                      art::alignment_cdf_csv(rows));
    art::atomic_write((fs::path(out) / "summary.csv").string(), art::summary_csv(rows));
    art::atomic_write((fs::path(out) / "run_meta.txt").string(),
                      meta_text("ablate", {{"data", a.data},
                                           {"config", art::format_train_config(cfg)}}));
    std::cout << "ablation done; see " << out << "/alignment_cdf.csv\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"art: learn a canonical orientation for 3D point clouds with "
                 "self-supervision, then auto-encode and align in that frame"};
    app.require_subcommand(1);
    app.footer("When --out is omitted, the ART_OUT_ROOT environment variable is used "
               "as the output directory.");

    GenArgs gen;
    auto* cgen = app.add_subcommand("gen", "Generate a synthetic corpus with a manifest");
    cgen->add_option("--family", gen.family, "Shape family: glider|quadtable")
        ->default_val("glider");
    cgen->add_option("--count", gen.count, "Shape count (default 500 glider / 300 quadtable)");
    cgen->add_option("--points", gen.points, "Points per shape")->default_val(256);
    cgen->add_option("--seed", gen.seed, "RNG seed")->default_val(0);
    cgen->add_option("--mode", gen.mode, "Perturbation: azimuthal|so3|none")
        ->default_val("azimuthal");
    cgen->add_option("--out", gen.out, "Output directory");

    TrainArgs train_args;
    auto* ctrain = app.add_subcommand("train", "Train an ART or plain auto-encoder model");
    ctrain->add_option("--config", train_args.config, "Training config file")->required();
    ctrain->add_option("--data", train_args.data, "Corpus root (manifest.txt)")->required();
    ctrain->add_option("--out", train_args.out, "Output directory");
    std::uint64_t seed_override = 0;
    auto* seed_opt = ctrain->add_option("--seed", seed_override, "Override config seed");

    AlignArgs align_args;
    auto* calign = app.add_subcommand("align", "Canonicalize clouds with a trained checkpoint");
    calign->add_option("--checkpoint", align_args.checkpoint, "Model checkpoint")->required();
    calign->add_option("--input", align_args.input, "A .obj file or a directory of them")
        ->required();
    calign->add_option("--out", align_args.out, "Output directory");

    EvalArgs eval_args;
    auto* ceval = app.add_subcommand("eval", "Alignment CDF and reconstruction comparison");
    ceval->add_option("--data", eval_args.data, "Corpus root")->required();
    ceval->add_option("--out", eval_args.out, "Output directory");
    ceval->add_option("--methods", eval_args.methods,
                      "Comma list: identity, pca, and checkpoint labels")
        ->default_val("identity,pca");
    ceval->add_option("--checkpoint", eval_args.checkpoints,
                      "label=path; label 'ae' also provides the reconstruction "
                      "model for identity/pca");

    AblateArgs ablate_args;
    auto* cablate = app.add_subcommand(
        "ablate", "Train with and without the equivariance losses and compare alignment");
    cablate->add_option("--config", ablate_args.config, "Training config file")->required();
    cablate->add_option("--data", ablate_args.data, "Corpus root")->required();
    cablate->add_option("--out", ablate_args.out, "Output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (cgen->parsed()) run_gen(gen);
        if (ctrain->parsed()) {
            if (seed_opt->count()) train_args.seed = seed_override;
            run_train(train_args);
        }
        if (calign->parsed()) run_align(align_args);
        if (ceval->parsed()) run_eval(eval_args);
        if (cablate->parsed()) run_ablate(ablate_args);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
