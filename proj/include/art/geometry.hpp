#pragma once

#include "art/rng.hpp"
#include "art/tensor.hpp"

#include <array>
#include <string>
#include <vector>

namespace art {

using Vec3 = std::array<double, 3>;

// Unordered point coordinates, 3×N row-major: pts[r*n + i] is coordinate r of
// point i. All coordinates finite, n ≥ 1.
struct PointCloud {
    int n = 0;
    std::vector<double> pts;

    PointCloud() = default;
    PointCloud(int n_, std::vector<double> pts_);

    double at(int row, int i) const { return pts[static_cast<std::size_t>(row) * n + i]; }
    double& at(int row, int i) { return pts[static_cast<std::size_t>(row) * n + i]; }
    Vec3 point(int i) const { return {at(0, i), at(1, i), at(2, i)}; }
    void set_point(int i, const Vec3& p) {
        at(0, i) = p[0];
        at(1, i) = p[1];
        at(2, i) = p[2];
    }
};

// Element of SO(3), row-major 3×3.
struct RotationMatrix {
    std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

    static RotationMatrix identity() { return {}; }
    double at(int r, int c) const { return m[3 * r + c]; }
    Vec3 apply(const Vec3& p) const;
    // ‖mᵀm − I‖_F and |det − 1| both under tol.
    bool valid(double tol = 1e-6) const;
};

RotationMatrix rot_axis_angle(const Vec3& axis, double radians);
// Exact {0, ±1} entries at multiples of 90 degrees.
RotationMatrix rot_z_deg(double degrees);

struct RotationMode {
    enum Kind { Azimuthal, FullSO3 };
    Kind kind = Azimuthal;
    Vec3 axis = {0.0, 0.0, 1.0};  // gravity/up axis for Azimuthal

    static RotationMode azimuthal(const Vec3& axis = {0.0, 0.0, 1.0});
    static RotationMode full_so3();
};

struct NormalizeResult {
    PointCloud cloud;  // centroid at origin, max point norm exactly 1
    Vec3 centroid;
    double scale;  // original max distance from centroid
};

// Centers at the centroid and scales so the farthest point sits on the unit
// sphere. Throws DegenerateError when all points coincide (scale < 1e-9).
NormalizeResult center_and_normalize(const PointCloud& x);

PointCloud apply_rotation(const RotationMatrix& r, const PointCloud& x);

// Symmetric Chamfer distance: mean squared nearest-neighbor distance in each
// direction, summed. Zero iff the point sets coincide.
double chamfer_distance(const PointCloud& a, const PointCloud& b);

// Differentiable variant; same value as chamfer_distance(a_data, b). Gradient
// flows to `a` through nearest-neighbor pairings held fixed at forward time.
diff::NodePtr chamfer_distance_diff(const diff::NodePtr& a, const PointCloud& b);

// arccos(clamp((trace(r1ᵀ r2) − 1)/2, −1, 1)) in degrees, in [0, 180].
double angular_distance_deg(const RotationMatrix& r1, const RotationMatrix& r2);

// FullSO3 draws Haar-uniform rotations (unit quaternion from a 4D standard
// normal); Azimuthal draws an angle uniform in [0, 2π) about the mode's axis.
RotationMatrix sample_rotation(const RotationMode& mode, Rng& rng);

RotationMatrix compose(const RotationMatrix& r1, const RotationMatrix& r2);  // r1·r2
RotationMatrix transpose(const RotationMatrix& r);

// `v x y z` text format, OBJ-vertex compatible. The loader ignores non-`v`
// lines; the writer emits 9 significant digits.
PointCloud parse_pointcloud(const std::string& text, const std::string& origin);
std::string format_pointcloud(const PointCloud& x);
PointCloud load_pointcloud(const std::string& path);
void save_pointcloud(const std::string& path, const PointCloud& x);

// Conversions to/from graph nodes ([3×N] layout matches PointCloud).
diff::NodePtr cloud_node(const PointCloud& x);
PointCloud cloud_from_node(const diff::NodePtr& n);
diff::NodePtr rotation_node(const RotationMatrix& r);
RotationMatrix rotation_from_node(const diff::NodePtr& n);

} // namespace art
