#include "art/data.hpp"

#include "art/errors.hpp"
#include "art/util.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>

namespace art {

namespace fs = std::filesystem;

ShapeFamily family_from_string(const std::string& s) {
    if (s == "glider") return ShapeFamily::Glider;
    if (s == "quadtable") return ShapeFamily::QuadTable;
    throw ConfigError("unknown shape family '" + s + "' (expected glider or quadtable)");
}

std::string family_to_string(ShapeFamily f) {
    return f == ShapeFamily::Glider ? "glider" : "quadtable";
}

Split make_split(int count) {
    const int n_train = static_cast<int>(std::llround(0.85 * count));
    const int n_val = static_cast<int>(std::llround(0.05 * count));
    Split s;
    for (int i = 0; i < count; ++i) {
        if (i < n_train)
            s.train.push_back(i);
        else if (i < n_train + n_val)
            s.val.push_back(i);
        else
            s.test.push_back(i);
    }
    return s;
}

namespace {

struct Box {
    Vec3 center;
    Vec3 half;
};

struct Face {
    const Box* box;
    int axis;    // normal axis
    int sign;    // +1 or -1
    double area;
};

std::vector<Face> box_faces(const std::vector<Box>& boxes) {
    std::vector<Face> faces;
    for (const Box& b : boxes) {
        const double ax = 4.0 * b.half[1] * b.half[2];
        const double ay = 4.0 * b.half[0] * b.half[2];
        const double az = 4.0 * b.half[0] * b.half[1];
        faces.push_back({&b, 0, +1, ax});
        faces.push_back({&b, 0, -1, ax});
        faces.push_back({&b, 1, +1, ay});
        faces.push_back({&b, 1, -1, ay});
        faces.push_back({&b, 2, +1, az});
        faces.push_back({&b, 2, -1, az});
    }
    return faces;
}

// Area-weighted uniform sample over the union of all box surfaces.
Vec3 sample_surface(const std::vector<Face>& faces, double total_area, Rng& rng) {
    double pick = rng.uniform() * total_area;
    const Face* face = &faces.back();
    for (const Face& f : faces) {
        if (pick < f.area) {
            face = &f;
            break;
        }
        pick -= f.area;
    }
    const Box& b = *face->box;
    Vec3 p = b.center;
    p[face->axis] += face->sign * b.half[face->axis];
    const int u_axis = (face->axis + 1) % 3;
    const int v_axis = (face->axis + 2) % 3;
    p[u_axis] += rng.uniform(-b.half[u_axis], b.half[u_axis]);
    p[v_axis] += rng.uniform(-b.half[v_axis], b.half[v_axis]);
    return p;
}

PointCloud sample_boxes(const std::vector<Box>& boxes, int n_points, Rng& rng) {
    const auto faces = box_faces(boxes);
    double total = 0.0;
    for (const auto& f : faces) total += f.area;
    PointCloud pc(n_points, std::vector<double>(3 * static_cast<std::size_t>(n_points), 0.0));
    for (int i = 0; i < n_points; ++i) pc.set_point(i, sample_surface(faces, total, rng));
    return pc;
}

// Fuselage along x (nose at +x), unequal wings along y, vertical tail fin at
// the rear. Six free parameters; every instance faces +x with up +z.
PointCloud make_glider(int n_points, Rng& rng) {
    const double fuselage_half_len = rng.uniform(0.8, 1.1);
    const double fuselage_half_thick = rng.uniform(0.09, 0.14);
    const double wing_half_chord = rng.uniform(0.16, 0.24);
    const double wing_span = rng.uniform(0.8, 1.05);
    const double wing_asym = rng.uniform(0.3, 0.45);
    const double tail_height = rng.uniform(0.35, 0.55);

    std::vector<Box> boxes;
    boxes.push_back({{0, 0, 0}, {fuselage_half_len, fuselage_half_thick, fuselage_half_thick}});
    // one slab spanning [-s(1-a), +s(1+a)] in y: the left wing is longer, and
    // the whole wing sits well forward of the fuselage midpoint
    boxes.push_back({{0.45, wing_span * wing_asym, 0}, {wing_half_chord, wing_span, 0.02}});
    boxes.push_back({{-fuselage_half_len + 0.14, 0, fuselage_half_thick + tail_height / 2},
                     {0.12, 0.03, tail_height / 2}});
    return sample_boxes(boxes, n_points, rng);
}

// Square top on four corner legs; three free parameters. The point set is
// made exactly 4-fold symmetric by sampling a quarter of the points and
// replicating them under the 90-degree rotations about z.
PointCloud make_quadtable(int n_points, Rng& rng) {
    const double top_half_side = rng.uniform(0.45, 0.7);
    const double top_thick = rng.uniform(0.06, 0.12);
    const double leg_height = rng.uniform(0.5, 0.9);
    const double leg_half_w = 0.12 * top_half_side;

    std::vector<Box> boxes;
    boxes.push_back({{0, 0, leg_height + top_thick / 2}, {top_half_side, top_half_side, top_thick / 2}});
    const double inset = top_half_side - leg_half_w;
    for (int sx : {-1, +1})
        for (int sy : {-1, +1})
            boxes.push_back({{sx * inset, sy * inset, leg_height / 2},
                             {leg_half_w, leg_half_w, leg_height / 2}});

    const int quarter = n_points / 4;
    PointCloud base = sample_boxes(boxes, quarter, rng);
    PointCloud pc(n_points, std::vector<double>(3 * static_cast<std::size_t>(n_points), 0.0));
    for (int i = 0; i < quarter; ++i) {
        const Vec3 p = base.point(i);
        pc.set_point(4 * i + 0, p);
        pc.set_point(4 * i + 1, {-p[1], p[0], p[2]});   // Rz(90°)
        pc.set_point(4 * i + 2, {-p[0], -p[1], p[2]});  // Rz(180°)
        pc.set_point(4 * i + 3, {p[1], -p[0], p[2]});   // Rz(270°)
    }
    return pc;
}

} // namespace

std::vector<PointCloud> generate(ShapeFamily family, int count, int points_per_shape,
                                 std::uint64_t seed) {
    if (count < 1) throw ConfigError("generate: count must be at least 1");
    if (points_per_shape < 64) throw ConfigError("generate: points_per_shape must be at least 64");
    if (family == ShapeFamily::QuadTable && points_per_shape % 4 != 0)
        throw ConfigError("generate: quadtable needs points_per_shape divisible by 4");

    std::vector<PointCloud> shapes(count);
    const Rng base(seed);
    std::string error;
    // independent per-shape streams keep the corpus identical across thread counts
#ifdef ART_HAVE_OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (int i = 0; i < count; ++i) {
        try {
            Rng rng = base.fork(static_cast<std::uint64_t>(i));
            PointCloud raw = family == ShapeFamily::Glider
                                 ? make_glider(points_per_shape, rng)
                                 : make_quadtable(points_per_shape, rng);
            shapes[i] = center_and_normalize(raw).cloud;
        } catch (const std::exception& e) {
#ifdef ART_HAVE_OPENMP
#pragma omp critical
#endif
            error = e.what();
        }
    }
    if (!error.empty()) throw Error("generate: " + error);
    return shapes;
}

Dataset perturb(const std::vector<PointCloud>& canonical, const RotationMode& mode,
                std::uint64_t seed) {
    Dataset ds;
    ds.mode = mode;
    ds.perturbed = true;
    ds.seed = seed;
    // tagged stream so perturbation draws are independent of generation draws
    const Rng base = Rng(seed).fork("perturb-rotations");
    for (std::size_t i = 0; i < canonical.size(); ++i) {
        Rng rng = base.fork(i);
        const RotationMatrix r = sample_rotation(mode, rng);
        ds.applied_gt.push_back(r);
        ds.clouds.push_back(apply_rotation(r, canonical[i]));
    }
    ds.split = make_split(static_cast<int>(canonical.size()));
    return ds;
}

Dataset no_perturb(const std::vector<PointCloud>& canonical, std::uint64_t seed) {
    Dataset ds;
    ds.mode = RotationMode::azimuthal();
    ds.perturbed = false;
    ds.seed = seed;
    ds.clouds = canonical;
    ds.applied_gt.assign(canonical.size(), RotationMatrix::identity());
    ds.split = make_split(static_cast<int>(canonical.size()));
    return ds;
}

std::vector<PointCloud> load_corpus(const std::string& dir) {
    if (!fs::is_directory(dir)) throw Error("corpus directory '" + dir + "' does not exist");
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".obj")
            files.push_back(entry.path().string());
    std::sort(files.begin(), files.end());
    std::vector<PointCloud> out;
    out.reserve(files.size());
    for (const auto& f : files) out.push_back(center_and_normalize(load_pointcloud(f)).cloud);
    return out;
}

namespace {

std::string index_name(std::size_t i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%06zu.obj", i);
    return buf;
}

const char* split_label(const Split& s, int idx) {
    for (int t : s.train)
        if (t == idx) return "train";
    for (int v : s.val)
        if (v == idx) return "val";
    return "test";
}

} // namespace

void save_dataset(const std::string& root, ShapeFamily family, const Dataset& ds) {
    const std::string fam = family_to_string(family);
    std::string manifest, rotations;
    for (std::size_t i = 0; i < ds.clouds.size(); ++i) {
        const std::string rel = fam + "/" + index_name(i);
        save_pointcloud((fs::path(root) / rel).string(), ds.clouds[i]);
        manifest += rel;
        manifest += " ";
        manifest += split_label(ds.split, static_cast<int>(i));
        manifest += "\n";
        rotations += rel;
        for (double v : ds.applied_gt[i].m) {
            rotations += " ";
            rotations += fmt_g17(v);
        }
        rotations += "\n";
    }
    atomic_write((fs::path(root) / "manifest.txt").string(), manifest);
    atomic_write((fs::path(root) / "rotations_eval.txt").string(), rotations);
}

Dataset load_dataset(const std::string& root) {
    const std::string manifest_path = (fs::path(root) / "manifest.txt").string();
    std::istringstream manifest(read_file(manifest_path));

    Dataset ds;
    ds.perturbed = true;
    std::vector<std::string> rels;
    std::string line;
    int line_no = 0;
    while (std::getline(manifest, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty()) continue;
        std::istringstream ls(t);
        std::string rel, label;
        if (!(ls >> rel >> label) || (label != "train" && label != "val" && label != "test"))
            throw ParseError(manifest_path + ":" + std::to_string(line_no) +
                             ": expected '<file> <train|val|test>'");
        const int idx = static_cast<int>(rels.size());
        rels.push_back(rel);
        ds.clouds.push_back(load_pointcloud((fs::path(root) / rel).string()));
        if (label == "train")
            ds.split.train.push_back(idx);
        else if (label == "val")
            ds.split.val.push_back(idx);
        else
            ds.split.test.push_back(idx);
    }
    if (rels.empty()) throw EmptyInputError(manifest_path + ": no entries");

    const std::string rot_path = (fs::path(root) / "rotations_eval.txt").string();
    std::istringstream rots(read_file(rot_path));
    ds.applied_gt.assign(rels.size(), RotationMatrix::identity());
    std::vector<bool> seen(rels.size(), false);
    line_no = 0;
    while (std::getline(rots, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty()) continue;
        std::istringstream ls(t);
        std::string rel;
        RotationMatrix r;
        if (!(ls >> rel)) throw ParseError(rot_path + ":" + std::to_string(line_no) + ": bad line");
        for (auto& v : r.m)
            if (!(ls >> v))
                throw ParseError(rot_path + ":" + std::to_string(line_no) +
                                 ": expected 9 rotation entries");
        const auto it = std::find(rels.begin(), rels.end(), rel);
        if (it == rels.end())
            throw ParseError(rot_path + ":" + std::to_string(line_no) +
                             ": file '" + rel + "' not in manifest");
        ds.applied_gt[static_cast<std::size_t>(it - rels.begin())] = r;
        seen[static_cast<std::size_t>(it - rels.begin())] = true;
    }
    for (std::size_t i = 0; i < seen.size(); ++i)
        if (!seen[i])
            throw ParseError(rot_path + ": missing rotation for '" + rels[i] + "'");
    return ds;
}

ShapeFamily dataset_family(const std::string& root) {
    std::istringstream manifest(read_file((fs::path(root) / "manifest.txt").string()));
    std::string line;
    while (std::getline(manifest, line)) {
        const std::string t = trim(line);
        if (t.empty()) continue;
        const auto slash = t.find('/');
        if (slash == std::string::npos) break;
        return family_from_string(t.substr(0, slash));
    }
    throw ParseError("cannot infer family from manifest in '" + root + "'");
}

} // namespace art
