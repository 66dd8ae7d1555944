#pragma once

#include "art/geometry.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace art {

// Synthetic shape families. Glider is asymmetric (fuselage, unequal wings,
// tail fin; trivial rotational symmetry group). QuadTable (square top, four
// legs) is invariant under 90-degree rotations about the up axis.
enum class ShapeFamily { Glider, QuadTable };

ShapeFamily family_from_string(const std::string& s);
std::string family_to_string(ShapeFamily f);

struct Split {
    std::vector<int> train, val, test;
};

// Disjoint, exhaustive 85/5/10 split over [0, count).
Split make_split(int count);

struct Dataset {
    std::vector<PointCloud> clouds;          // perturbed; what training sees
    std::vector<RotationMatrix> applied_gt;  // evaluation only
    Split split;
    RotationMode mode;
    bool perturbed = true;
    std::uint64_t seed = 0;

    // The training view deliberately omits applied_gt so the training code
    // path cannot read ground-truth rotations.
    struct TrainView {
        const std::vector<PointCloud>* clouds = nullptr;
        const Split* split = nullptr;
    };
    TrainView train_view() const { return {&clouds, &split}; }
};

// Shapes sampled in the family's generator-canonical orientation (gliders
// face +x, up is +z), surface-sampled to exactly points_per_shape points,
// then centered and normalized. Same seed, same corpus, bit for bit.
std::vector<PointCloud> generate(ShapeFamily family, int count, int points_per_shape,
                                 std::uint64_t seed);

// One independent rotation per shape; ground truth stored for evaluation.
Dataset perturb(const std::vector<PointCloud>& canonical, const RotationMode& mode,
                std::uint64_t seed);
// Identity "perturbation" (pre-aligned corpus), ground truths all I.
Dataset no_perturb(const std::vector<PointCloud>& canonical, std::uint64_t seed);

// All point-cloud files in a directory, ordered by filename, each centered
// and normalized.
std::vector<PointCloud> load_corpus(const std::string& dir);

// Corpus layout: <root>/<family>/NNNNNN.obj, a manifest listing `file split`
// per line, and a separate evaluation-only file listing `file r00 ... r22`
// (the applied rotation, row-major).
void save_dataset(const std::string& root, ShapeFamily family, const Dataset& ds);
Dataset load_dataset(const std::string& root);
ShapeFamily dataset_family(const std::string& root);

} // namespace art
