#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "art/data.hpp"
#include "art/errors.hpp"
#include "art/util.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace art;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("art_data_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

} // namespace

TEST_CASE("generate is deterministic in the seed") {
    auto a = generate(ShapeFamily::Glider, 5, 64, 99);
    auto b = generate(ShapeFamily::Glider, 5, 64, 99);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].pts == b[i].pts);

    auto c = generate(ShapeFamily::Glider, 5, 64, 100);
    CHECK(a[0].pts != c[0].pts);
}

TEST_CASE("generated shapes are centered and normalized") {
    for (auto family : {ShapeFamily::Glider, ShapeFamily::QuadTable}) {
        auto shapes = generate(family, 4, 128, 3);
        for (const auto& s : shapes) {
            Vec3 c = {0, 0, 0};
            double max_norm = 0;
            for (int i = 0; i < s.n; ++i) {
                for (int r = 0; r < 3; ++r) c[r] += s.at(r, i);
                const auto p = s.point(i);
                max_norm = std::max(max_norm,
                                    std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]));
            }
            for (int r = 0; r < 3; ++r) CHECK(std::abs(c[r] / s.n) < 1e-12);
            CHECK(max_norm == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("glider asymmetry witness: 180-degree flip moves the cloud") {
    auto shapes = generate(ShapeFamily::Glider, 10, 256, 7);
    for (const auto& s : shapes) {
        const double d = chamfer_distance(s, apply_rotation(rot_z_deg(180), s));
        CHECK(d > 0.05);
    }
}

TEST_CASE("quadtable symmetry witness: quarter turn leaves the cloud in place") {
    auto shapes = generate(ShapeFamily::QuadTable, 10, 256, 7);
    for (const auto& s : shapes) {
        const double d = chamfer_distance(s, apply_rotation(rot_z_deg(90), s));
        CHECK(d < 1e-3);
    }
}

TEST_CASE("generate validates its arguments") {
    CHECK_THROWS_AS(generate(ShapeFamily::Glider, 0, 256, 1), ConfigError);
    CHECK_THROWS_AS(generate(ShapeFamily::Glider, 3, 32, 1), ConfigError);
    CHECK_THROWS_AS(generate(ShapeFamily::QuadTable, 3, 255, 1), ConfigError);
    CHECK_THROWS_AS(family_from_string("pyramid"), ConfigError);
}

TEST_CASE("split proportions are 85/5/10") {
    const Split s = make_split(200);
    CHECK(s.train.size() == 170);
    CHECK(s.val.size() == 10);
    CHECK(s.test.size() == 20);

    const Split t = make_split(500);
    CHECK(t.train.size() == 425);
    CHECK(t.val.size() == 25);
    CHECK(t.test.size() == 50);

    // disjoint and exhaustive
    std::vector<bool> seen(500, false);
    for (auto part : {&t.train, &t.val, &t.test})
        for (int i : *part) {
            CHECK(!seen[i]);
            seen[i] = true;
        }
    for (bool b : seen) CHECK(b);
}

TEST_CASE("perturb stores the applied rotation and the inverse recovers the shape") {
    auto canonical = generate(ShapeFamily::Glider, 6, 64, 11);
    auto ds = perturb(canonical, RotationMode::azimuthal(), 5);
    REQUIRE(ds.clouds.size() == canonical.size());
    for (std::size_t i = 0; i < canonical.size(); ++i) {
        // azimuthal rotations fix the up axis
        const Vec3 up = {0, 0, 1};
        const Vec3 rotated_up = ds.applied_gt[i].apply(up);
        for (int c = 0; c < 3; ++c) CHECK(std::abs(rotated_up[c] - up[c]) < 1e-9);
        // recovered cloud matches the canonical one
        auto rec = apply_rotation(transpose(ds.applied_gt[i]), ds.clouds[i]);
        for (std::size_t j = 0; j < rec.pts.size(); ++j)
            CHECK(std::abs(rec.pts[j] - canonical[i].pts[j]) < 1e-9);
    }

    auto unperturbed = no_perturb(canonical, 5);
    for (std::size_t i = 0; i < canonical.size(); ++i) {
        CHECK(unperturbed.applied_gt[i].m == RotationMatrix::identity().m);
        CHECK(unperturbed.clouds[i].pts == canonical[i].pts);
    }
}

TEST_CASE("perturb draws fresh rotations per shape") {
    auto canonical = generate(ShapeFamily::Glider, 8, 64, 13);
    auto ds = perturb(canonical, RotationMode::full_so3(), 21);
    int distinct = 0;
    for (std::size_t i = 1; i < ds.applied_gt.size(); ++i)
        if (angular_distance_deg(ds.applied_gt[0], ds.applied_gt[i]) > 1.0) ++distinct;
    CHECK(distinct >= 6);
}

TEST_CASE("load_corpus reads v-lines, ignores the rest, reports errors") {
    TempDir tmp;
    atomic_write((tmp.path / "b.obj").string(), "v 0 0 0\nv 1 0 0\nv 0 2 0\n");
    atomic_write((tmp.path / "a.obj").string(),
                 "# header\nv 1 1 1\nvn 0 0 1\nv -1 -1 -1\nf 1 2\n");
    atomic_write((tmp.path / "notes.txt").string(), "not a cloud\n");

    auto corpus = load_corpus(tmp.path.string());
    REQUIRE(corpus.size() == 2);
    CHECK(corpus[0].n == 2);  // a.obj sorts first
    CHECK(corpus[1].n == 3);

    atomic_write((tmp.path / "c.obj").string(), "v 1 2 3\nv oops 1 2\n");
    try {
        load_corpus(tmp.path.string());
        CHECK(false);
    } catch (const ParseError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("c.obj:2") != std::string::npos);
    }
    fs::remove(tmp.path / "c.obj");

    atomic_write((tmp.path / "d.obj").string(), "# empty\n");
    CHECK_THROWS_AS(load_corpus(tmp.path.string()), EmptyInputError);
}

TEST_CASE("dataset save/load round trip") {
    TempDir tmp;
    auto canonical = generate(ShapeFamily::QuadTable, 12, 64, 17);
    auto ds = perturb(canonical, RotationMode::full_so3(), 23);
    save_dataset(tmp.path.string(), ShapeFamily::QuadTable, ds);

    CHECK(dataset_family(tmp.path.string()) == ShapeFamily::QuadTable);
    auto loaded = load_dataset(tmp.path.string());
    REQUIRE(loaded.clouds.size() == ds.clouds.size());
    CHECK(loaded.split.train == ds.split.train);
    CHECK(loaded.split.val == ds.split.val);
    CHECK(loaded.split.test == ds.split.test);
    for (std::size_t i = 0; i < ds.clouds.size(); ++i) {
        CHECK(loaded.applied_gt[i].m == ds.applied_gt[i].m);  // %.17g exact
        REQUIRE(loaded.clouds[i].n == ds.clouds[i].n);
        for (std::size_t j = 0; j < ds.clouds[i].pts.size(); ++j)
            CHECK(std::abs(loaded.clouds[i].pts[j] - ds.clouds[i].pts[j]) < 1e-8);
    }
}

TEST_CASE("the training view carries no ground-truth rotations") {
    auto canonical = generate(ShapeFamily::Glider, 4, 64, 3);
    auto ds = perturb(canonical, RotationMode::azimuthal(), 3);
    Dataset::TrainView view = ds.train_view();
    CHECK(view.clouds == &ds.clouds);
    CHECK(view.split == &ds.split);
    // Type-level separation: TrainView has exactly these two members, so a
    // training path cannot reach applied_gt through it.
    static_assert(sizeof(Dataset::TrainView) == 2 * sizeof(void*));
}
