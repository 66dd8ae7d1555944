// End-to-end checks of the `art` binary. The test runner passes its path in
// the ART_CLI environment variable.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "art/network.hpp"
#include "art/util.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

std::string cli_path() {
    const char* p = std::getenv("ART_CLI");
    REQUIRE_MESSAGE(p != nullptr, "ART_CLI must point at the art binary");
    return p;
}

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("art_cli_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

int run(const std::string& args, std::string* output = nullptr) {
    const std::string log = (fs::temp_directory_path() /
                             ("art_cli_out_" + std::to_string(::getpid()) + ".log"))
                                .string();
    const std::string cmd = cli_path() + " " + args + " >" + log + " 2>&1";
    const int status = std::system(cmd.c_str());
    if (output) {
        std::ifstream in(log);
        std::ostringstream ss;
        ss << in.rdbuf();
        *output = ss.str();
    }
    fs::remove(log);
    return status == -1 ? -1 : WEXITSTATUS(status);
}

} // namespace

TEST_CASE("gen writes a corpus and reruns are byte-identical") {
    TempDir a, b;
    const std::string args = "gen --family glider --count 12 --points 64 --seed 7 --mode azimuthal";
    CHECK(run(args + " --out " + a.path.string()) == 0);
    CHECK(run(args + " --out " + b.path.string()) == 0);

    for (const char* f : {"manifest.txt", "rotations_eval.txt", "run_meta.txt",
                          "glider/000000.obj", "glider/000011.obj"}) {
        const std::string fa = art::read_file((a.path / f).string());
        const std::string fb = art::read_file((b.path / f).string());
        CHECK(fa == fb);
        CHECK(!fa.empty());
    }
    // different seed, different corpus
    TempDir c;
    CHECK(run("gen --family glider --count 12 --points 64 --seed 8 --mode azimuthal --out " +
              c.path.string()) == 0);
    CHECK(art::read_file((a.path / "glider/000000.obj").string()) !=
          art::read_file((c.path / "glider/000000.obj").string()));
}

TEST_CASE("align with a fresh checkpoint predicts the identity everywhere") {
    TempDir dir;
    // corpus to align
    CHECK(run("gen --family glider --count 3 --points 64 --seed 1 --mode so3 --out " +
              dir.path.string() + "/corpus") == 0);
    // untrained checkpoint
    art::ModelConfig cfg;
    cfg.encoder_widths = {8, 12};
    cfg.head_hidden = 8;
    cfg.decoder_hidden = {16};
    cfg.latent_dim = 4;
    cfg.decoder_points = 8;
    cfg.refine_steps = 2;
    art::ArtModel model(cfg, 3);
    const std::string ckpt = (dir.path / "fresh.ckpt").string();
    art::save_model(model, ckpt);

    CHECK(run("align --checkpoint " + ckpt + " --input " + dir.path.string() +
              "/corpus/glider --out " + dir.path.string() + "/aligned") == 0);

    for (int i = 0; i < 3; ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "%06d.rot.txt", i);
        std::istringstream in(art::read_file((dir.path / "aligned" / name).string()));
        double m[9];
        for (auto& v : m) REQUIRE((in >> v));
        for (int e = 0; e < 9; ++e) CHECK(m[e] == (e % 4 == 0 ? 1.0 : 0.0));
    }
    CHECK(fs::exists(dir.path / "aligned" / "000000.canonical.obj"));
}

TEST_CASE("eval with the identity method on unperturbed data gives a flat CDF of 1") {
    TempDir dir;
    CHECK(run("gen --family glider --count 24 --points 64 --seed 5 --mode none --out " +
              dir.path.string() + "/corpus") == 0);
    CHECK(run("eval --data " + dir.path.string() + "/corpus --methods identity --out " +
              dir.path.string() + "/eval") == 0);
    std::istringstream csv(art::read_file((dir.path / "eval" / "alignment_cdf.csv").string()));
    std::string line;
    std::getline(csv, line);
    CHECK(line == "method,threshold_deg,fraction");
    int rows = 0;
    while (std::getline(csv, line)) {
        if (line.empty()) continue;
        ++rows;
        CHECK(line.substr(line.rfind(',') + 1) == "1");
    }
    CHECK(rows == 36);

    // reruns are byte-identical (CSV determinism)
    TempDir dir2;
    CHECK(run("eval --data " + dir.path.string() + "/corpus --methods identity --out " +
              dir2.path.string()) == 0);
    CHECK(art::read_file((dir.path / "eval" / "alignment_cdf.csv").string()) ==
          art::read_file((dir2.path / "alignment_cdf.csv").string()));
}

TEST_CASE("errors surface as a one-line diagnostic and nonzero exit") {
    TempDir dir;
    std::string output;
    const int status = run("train --config " + dir.path.string() +
                               "/missing.cfg --data nowhere --out " + dir.path.string(),
                           &output);
    CHECK(status != 0);
    CHECK(output.find("error:") != std::string::npos);

    // unknown config key is caught before any training
    art::atomic_write((dir.path / "bad.cfg").string(), "learning_rate = 0.1\n");
    std::string output2;
    const int status2 = run("train --config " + (dir.path / "bad.cfg").string() +
                                " --data nowhere --out " + dir.path.string(),
                            &output2);
    CHECK(status2 != 0);
    CHECK(output2.find("unknown config key 'learning_rate'") != std::string::npos);
}

TEST_CASE("gen rejects unknown families and modes") {
    TempDir dir;
    std::string output;
    CHECK(run("gen --family pyramid --count 4 --points 64 --out " + dir.path.string(),
              &output) != 0);
    CHECK(output.find("error:") != std::string::npos);
    CHECK(run("gen --family glider --count 4 --points 64 --mode diagonal --out " +
              dir.path.string()) != 0);
}
