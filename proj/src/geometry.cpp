#include "art/geometry.hpp"

#include "art/errors.hpp"
#include "art/kernels.hpp"
#include "art/util.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace art {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kDegenerateScale = 1e-9;
} // namespace

PointCloud::PointCloud(int n_, std::vector<double> pts_) : n(n_), pts(std::move(pts_)) {
    if (n < 1) throw EmptyInputError("point cloud needs at least one point");
    if (pts.size() != static_cast<std::size_t>(3 * n))
        throw ShapeError("point cloud storage size " + std::to_string(pts.size()) +
                         " does not match 3x" + std::to_string(n));
    for (double v : pts)
        if (!std::isfinite(v)) throw Error("point cloud contains a non-finite coordinate");
}

Vec3 RotationMatrix::apply(const Vec3& p) const {
    return {m[0] * p[0] + m[1] * p[1] + m[2] * p[2],
            m[3] * p[0] + m[4] * p[1] + m[5] * p[2],
            m[6] * p[0] + m[7] * p[1] + m[8] * p[2]};
}

bool RotationMatrix::valid(double tol) const {
    // ‖mᵀm − I‖_F
    double fro = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double dotv = 0.0;
            for (int k = 0; k < 3; ++k) dotv += m[3 * k + i] * m[3 * k + j];
            const double target = (i == j) ? 1.0 : 0.0;
            fro += (dotv - target) * (dotv - target);
        }
    if (std::sqrt(fro) >= tol) return false;
    const double det = m[0] * (m[4] * m[8] - m[5] * m[7]) -
                       m[1] * (m[3] * m[8] - m[5] * m[6]) +
                       m[2] * (m[3] * m[7] - m[4] * m[6]);
    return std::abs(det - 1.0) <= tol;
}

RotationMatrix rot_axis_angle(const Vec3& axis, double radians) {
    const double len = std::sqrt(axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]);
    if (!(len > 0.0)) throw DegenerateError("rotation axis has zero length");
    const double x = axis[0] / len, y = axis[1] / len, z = axis[2] / len;
    const double c = std::cos(radians), s = std::sin(radians), t = 1.0 - c;
    RotationMatrix r;
    r.m = {t * x * x + c,     t * x * y - s * z, t * x * z + s * y,
           t * x * y + s * z, t * y * y + c,     t * y * z - s * x,
           t * x * z - s * y, t * y * z + s * x, t * z * z + c};
    return r;
}

RotationMatrix rot_z_deg(double degrees) {
    double q = degrees / 90.0;
    if (q == std::floor(q)) {
        // exact entries for quarter turns
        int k = static_cast<int>(std::floor(q)) % 4;
        if (k < 0) k += 4;
        static const double table[4][4] = {
            // cos, sin per quarter
            {1, 0, 0, 0}, {0, 1, 0, 0}, {-1, 0, 0, 0}, {0, -1, 0, 0}};
        const double c = table[k][0], s = table[k][1];
        RotationMatrix r;
        r.m = {c, -s, 0, s, c, 0, 0, 0, 1};
        return r;
    }
    return rot_axis_angle({0, 0, 1}, degrees * kPi / 180.0);
}

RotationMode RotationMode::azimuthal(const Vec3& axis) {
    RotationMode m;
    m.kind = Azimuthal;
    const double len = std::sqrt(axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]);
    if (!(len > 0.0)) throw DegenerateError("azimuthal axis has zero length");
    m.axis = {axis[0] / len, axis[1] / len, axis[2] / len};
    return m;
}

RotationMode RotationMode::full_so3() {
    RotationMode m;
    m.kind = FullSO3;
    return m;
}

NormalizeResult center_and_normalize(const PointCloud& x) {
    Vec3 c = {0, 0, 0};
    for (int i = 0; i < x.n; ++i) {
        c[0] += x.at(0, i);
        c[1] += x.at(1, i);
        c[2] += x.at(2, i);
    }
    for (auto& v : c) v /= x.n;
    double max_norm = 0.0;
    for (int i = 0; i < x.n; ++i) {
        const double dx = x.at(0, i) - c[0];
        const double dy = x.at(1, i) - c[1];
        const double dz = x.at(2, i) - c[2];
        max_norm = std::max(max_norm, std::sqrt(dx * dx + dy * dy + dz * dz));
    }
    if (max_norm < kDegenerateScale)
        throw DegenerateError("degenerate shape: all points coincide (max extent " +
                              std::to_string(max_norm) + ")");
    PointCloud out = x;
    for (int i = 0; i < x.n; ++i) {
        out.at(0, i) = (x.at(0, i) - c[0]) / max_norm;
        out.at(1, i) = (x.at(1, i) - c[1]) / max_norm;
        out.at(2, i) = (x.at(2, i) - c[2]) / max_norm;
    }
    return {std::move(out), c, max_norm};
}

PointCloud apply_rotation(const RotationMatrix& r, const PointCloud& x) {
    PointCloud out = x;
    kernels::matmul(r.m.data(), x.pts.data(), out.pts.data(), 3, 3, x.n);
    return out;
}

double chamfer_distance(const PointCloud& a, const PointCloud& b) {
    if (a.n < 1 || b.n < 1) throw EmptyInputError("chamfer distance of empty cloud");
    std::vector<int> idx(std::max(a.n, b.n));
    std::vector<double> d(std::max(a.n, b.n));
    kernels::nearest_point(a.pts.data(), a.n, b.pts.data(), b.n, idx.data(), d.data());
    double ab = 0.0;
    for (int i = 0; i < a.n; ++i) ab += d[i];
    ab /= a.n;
    kernels::nearest_point(b.pts.data(), b.n, a.pts.data(), a.n, idx.data(), d.data());
    double ba = 0.0;
    for (int i = 0; i < b.n; ++i) ba += d[i];
    ba /= b.n;
    return ab + ba;
}

diff::NodePtr chamfer_distance_diff(const diff::NodePtr& a, const PointCloud& b) {
    if (a->shape.size() != 2 || a->shape[0] != 3)
        throw ShapeError("chamfer_distance_diff: expected [3,N], got " +
                         diff::shape_str(a->shape));
    const int na = a->shape[1];
    const int nb = b.n;
    if (na < 1 || nb < 1) throw EmptyInputError("chamfer distance of empty cloud");

    // forward: nearest neighbors in both directions, pairings then fixed
    std::vector<int> ab_idx(na), ba_idx(nb);
    std::vector<double> ab_d(na), ba_d(nb);
    kernels::nearest_point(a->data.data(), na, b.pts.data(), nb, ab_idx.data(), ab_d.data());
    kernels::nearest_point(b.pts.data(), nb, a->data.data(), na, ba_idx.data(), ba_d.data());
    double ab = 0.0, ba = 0.0;
    for (int i = 0; i < na; ++i) ab += ab_d[i];
    for (int j = 0; j < nb; ++j) ba += ba_d[j];
    const double value = ab / na + ba / nb;

    std::vector<double> bpts = b.pts;  // keep target alive for the backward pass
    return diff::make_node(
        {1}, {value}, {a},
        [na, nb, ab_idx = std::move(ab_idx), ba_idx = std::move(ba_idx),
         bpts = std::move(bpts), pa = a](const double* g, const std::vector<double*>& gp) {
            const double g0 = g[0];
            const double* ad = pa->data.data();
            // d/da_i of (1/na) Σ ‖a_i − b_nn(i)‖²
            for (int i = 0; i < na; ++i) {
                const int j = ab_idx[i];
                for (int r = 0; r < 3; ++r) {
                    const double diffv = ad[r * na + i] - bpts[static_cast<std::size_t>(r) * nb + j];
                    gp[0][r * na + i] += g0 * 2.0 * diffv / na;
                }
            }
            // d/da of (1/nb) Σ ‖b_j − a_nn(j)‖²
            for (int j = 0; j < nb; ++j) {
                const int i = ba_idx[j];
                for (int r = 0; r < 3; ++r) {
                    const double diffv = ad[r * na + i] - bpts[static_cast<std::size_t>(r) * nb + j];
                    gp[0][r * na + i] += g0 * 2.0 * diffv / nb;
                }
            }
        });
}

double angular_distance_deg(const RotationMatrix& r1, const RotationMatrix& r2) {
    double tr = 0.0;
    for (int e = 0; e < 9; ++e) tr += r1.m[e] * r2.m[e];  // trace(r1ᵀ r2)
    double c = (tr - 1.0) / 2.0;
    c = std::min(1.0, std::max(-1.0, c));
    return std::acos(c) * (180.0 / kPi);
}

RotationMatrix sample_rotation(const RotationMode& mode, Rng& rng) {
    if (mode.kind == RotationMode::Azimuthal)
        return rot_axis_angle(mode.axis, rng.uniform(0.0, 2.0 * kPi));
    // unit quaternion from 4D standard normal
    double q[4];
    double norm2 = 0.0;
    do {
        norm2 = 0.0;
        for (auto& v : q) {
            v = rng.normal();
            norm2 += v * v;
        }
    } while (norm2 < 1e-12);
    const double inv = 1.0 / std::sqrt(norm2);
    const double w = q[0] * inv, x = q[1] * inv, y = q[2] * inv, z = q[3] * inv;
    RotationMatrix r;
    r.m = {1 - 2 * (y * y + z * z), 2 * (x * y - z * w),     2 * (x * z + y * w),
           2 * (x * y + z * w),     1 - 2 * (x * x + z * z), 2 * (y * z - x * w),
           2 * (x * z - y * w),     2 * (y * z + x * w),     1 - 2 * (x * x + y * y)};
    return r;
}

RotationMatrix compose(const RotationMatrix& r1, const RotationMatrix& r2) {
    RotationMatrix out;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double s = 0.0;
            for (int k = 0; k < 3; ++k) s += r1.m[3 * i + k] * r2.m[3 * k + j];
            out.m[3 * i + j] = s;
        }
    return out;
}

RotationMatrix transpose(const RotationMatrix& r) {
    RotationMatrix out;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) out.m[3 * i + j] = r.m[3 * j + i];
    return out;
}

PointCloud parse_pointcloud(const std::string& text, const std::string& origin) {
    std::vector<double> xs, ys, zs;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.size() < 2 || t[0] != 'v' || (t[1] != ' ' && t[1] != '\t')) continue;
        std::istringstream ls(t.substr(1));
        double x, y, z;
        if (!(ls >> x >> y >> z))
            throw ParseError(origin + ":" + std::to_string(line_no) +
                             ": malformed vertex line '" + t + "'");
        std::string extra;
        if (ls >> extra)
            throw ParseError(origin + ":" + std::to_string(line_no) +
                             ": trailing data on vertex line '" + t + "'");
        if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z))
            throw ParseError(origin + ":" + std::to_string(line_no) +
                             ": non-finite coordinate");
        xs.push_back(x);
        ys.push_back(y);
        zs.push_back(z);
    }
    if (xs.empty()) throw EmptyInputError(origin + ": no vertex lines found");
    const int n = static_cast<int>(xs.size());
    std::vector<double> pts(3 * static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        pts[i] = xs[i];
        pts[n + i] = ys[i];
        pts[2 * n + i] = zs[i];
    }
    return PointCloud(n, std::move(pts));
}

std::string format_pointcloud(const PointCloud& x) {
    std::string out;
    out.reserve(static_cast<std::size_t>(x.n) * 40);
    for (int i = 0; i < x.n; ++i) {
        out += "v ";
        out += fmt_g9(x.at(0, i));
        out += " ";
        out += fmt_g9(x.at(1, i));
        out += " ";
        out += fmt_g9(x.at(2, i));
        out += "\n";
    }
    return out;
}

PointCloud load_pointcloud(const std::string& path) {
    return parse_pointcloud(read_file(path), path);
}

void save_pointcloud(const std::string& path, const PointCloud& x) {
    atomic_write(path, format_pointcloud(x));
}

diff::NodePtr cloud_node(const PointCloud& x) {
    return diff::leaf({3, x.n}, x.pts);
}

PointCloud cloud_from_node(const diff::NodePtr& n) {
    if (n->shape.size() != 2 || n->shape[0] != 3)
        throw ShapeError("cloud_from_node: expected [3,N], got " + diff::shape_str(n->shape));
    return PointCloud(n->shape[1], n->data);
}

diff::NodePtr rotation_node(const RotationMatrix& r) {
    return diff::leaf({3, 3}, std::vector<double>(r.m.begin(), r.m.end()));
}

RotationMatrix rotation_from_node(const diff::NodePtr& n) {
    if (n->shape != diff::Shape{3, 3})
        throw ShapeError("rotation_from_node: expected [3,3], got " + diff::shape_str(n->shape));
    RotationMatrix r;
    for (int i = 0; i < 9; ++i) r.m[i] = n->data[i];
    return r;
}

} // namespace art
