#include "art/tensor.hpp"

#include "art/errors.hpp"
#include "art/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

#if defined(__GLIBC__)
#include <malloc.h>
namespace {
// Activation buffers run to ~512 KB; keep them in the malloc arena instead of
// bouncing through mmap/munmap on every graph rebuild.
const int art_malloc_tuned = [] {
    mallopt(M_MMAP_THRESHOLD, 64 * 1024 * 1024);
    return 0;
}();
} // namespace
#endif

namespace art::diff {

std::size_t numel(const Shape& s) {
    std::size_t n = 1;
    for (int d : s) n *= static_cast<std::size_t>(d);
    return n;
}

std::string shape_str(const Shape& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

Node::Node(Shape s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
    if (data.size() != numel(shape))
        throw ShapeError("node data size " + std::to_string(data.size()) +
                         " does not match shape " + shape_str(shape));
}

double Node::value() const {
    if (!is_scalar()) throw ShapeError("value() requires a scalar node, got " + shape_str(shape));
    return data[0];
}

NodePtr leaf(Shape shape, std::vector<double> data) {
    return std::make_shared<Node>(std::move(shape), std::move(data));
}

NodePtr scalar(double v) { return leaf({1}, {v}); }

NodePtr make_node(Shape shape, std::vector<double> data, std::vector<NodePtr> parents,
                  std::function<void(const double*, const std::vector<double*>&)> backprop) {
    auto n = std::make_shared<Node>(std::move(shape), std::move(data));
    n->parents = std::move(parents);
    n->backprop = std::move(backprop);
    return n;
}

namespace {

void require_same_shape(const NodePtr& a, const NodePtr& b, const char* op) {
    if (a->shape != b->shape)
        throw ShapeError(std::string(op) + ": shapes disagree: " + shape_str(a->shape) +
                         " vs " + shape_str(b->shape));
}

void require_rank(const NodePtr& a, int rank, const char* op) {
    if (static_cast<int>(a->shape.size()) != rank)
        throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) +
                         ", got shape " + shape_str(a->shape));
}

} // namespace

NodePtr add(const NodePtr& a, const NodePtr& b) {
    require_same_shape(a, b, "add");
    std::vector<double> out(a->size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->data[i] + b->data[i];
    return make_node(a->shape, std::move(out), {a, b},
                     [n = a->size()](const double* g, const std::vector<double*>& gp) {
                         for (std::size_t i = 0; i < n; ++i) {
                             gp[0][i] += g[i];
                             gp[1][i] += g[i];
                         }
                     });
}

NodePtr add_colwise(const NodePtr& a, const NodePtr& bias) {
    require_rank(a, 2, "add_colwise");
    require_rank(bias, 1, "add_colwise");
    if (a->shape[0] != bias->shape[0])
        throw ShapeError("add_colwise: rows " + shape_str(a->shape) + " vs bias " +
                         shape_str(bias->shape));
    const int f = a->shape[0], n = a->shape[1];
    std::vector<double> out(a->size());
    for (int r = 0; r < f; ++r) {
        const double bv = bias->data[r];
        for (int j = 0; j < n; ++j) out[r * n + j] = a->data[r * n + j] + bv;
    }
    return make_node(a->shape, std::move(out), {a, bias},
                     [f, n](const double* g, const std::vector<double*>& gp) {
                         for (int r = 0; r < f; ++r) {
                             double acc = 0.0;
                             for (int j = 0; j < n; ++j) {
                                 gp[0][r * n + j] += g[r * n + j];
                                 acc += g[r * n + j];
                             }
                             gp[1][r] += acc;
                         }
                     });
}

NodePtr sub(const NodePtr& a, const NodePtr& b) {
    require_same_shape(a, b, "sub");
    std::vector<double> out(a->size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->data[i] - b->data[i];
    return make_node(a->shape, std::move(out), {a, b},
                     [n = a->size()](const double* g, const std::vector<double*>& gp) {
                         for (std::size_t i = 0; i < n; ++i) {
                             gp[0][i] += g[i];
                             gp[1][i] -= g[i];
                         }
                     });
}

NodePtr mul(const NodePtr& a, const NodePtr& b) {
    require_same_shape(a, b, "mul");
    std::vector<double> out(a->size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->data[i] * b->data[i];
    return make_node(a->shape, std::move(out), {a, b},
                     [pa = a, pb = b](const double* g, const std::vector<double*>& gp) {
                         for (std::size_t i = 0; i < pa->size(); ++i) {
                             gp[0][i] += g[i] * pb->data[i];
                             gp[1][i] += g[i] * pa->data[i];
                         }
                     });
}

NodePtr scale(const NodePtr& a, double c) {
    std::vector<double> out(a->size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->data[i] * c;
    return make_node(a->shape, std::move(out), {a},
                     [c, n = a->size()](const double* g, const std::vector<double*>& gp) {
                         for (std::size_t i = 0; i < n; ++i) gp[0][i] += g[i] * c;
                     });
}

NodePtr matmul(const NodePtr& a, const NodePtr& b) {
    require_rank(a, 2, "matmul");
    const bool vec = b->shape.size() == 1;
    if (!vec && b->shape.size() != 2)
        throw ShapeError("matmul: right operand must be rank 1 or 2, got " +
                         shape_str(b->shape));
    const int m = a->shape[0], k = a->shape[1];
    const int kb = b->shape[0];
    const int n = vec ? 1 : b->shape[1];
    if (k != kb)
        throw ShapeError("matmul: inner dimensions disagree: " + shape_str(a->shape) +
                         " x " + shape_str(b->shape));
    std::vector<double> out(static_cast<std::size_t>(m) * n);
    kernels::matmul(a->data.data(), b->data.data(), out.data(), m, k, n);
    Shape os = vec ? Shape{m} : Shape{m, n};
    return make_node(std::move(os), std::move(out), {a, b},
                     [pa = a, pb = b, m, k, n](const double* g, const std::vector<double*>& gp) {
                         kernels::matmul_grad_left(g, pb->data.data(), gp[0], m, k, n);
                         kernels::matmul_grad_right(pa->data.data(), g, gp[1], m, k, n);
                     });
}

NodePtr transpose2d(const NodePtr& a) {
    require_rank(a, 2, "transpose2d");
    const int r = a->shape[0], c = a->shape[1];
    std::vector<double> out(a->size());
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) out[j * r + i] = a->data[i * c + j];
    return make_node({c, r}, std::move(out), {a},
                     [r, c](const double* g, const std::vector<double*>& gp) {
                         for (int i = 0; i < r; ++i)
                             for (int j = 0; j < c; ++j) gp[0][i * c + j] += g[j * r + i];
                     });
}

NodePtr reshape(const NodePtr& a, Shape s) {
    if (numel(s) != a->size())
        throw ShapeError("reshape: cannot view " + shape_str(a->shape) + " as " + shape_str(s));
    std::vector<double> out = a->data;
    return make_node(std::move(s), std::move(out), {a},
                     [n = a->size()](const double* g, const std::vector<double*>& gp) {
                         for (std::size_t i = 0; i < n; ++i) gp[0][i] += g[i];
                     });
}

NodePtr slice1d(const NodePtr& a, int start, int len) {
    require_rank(a, 1, "slice1d");
    if (start < 0 || len < 0 || start + len > a->shape[0])
        throw ShapeError("slice1d: range [" + std::to_string(start) + "," +
                         std::to_string(start + len) + ") outside " + shape_str(a->shape));
    std::vector<double> out(a->data.begin() + start, a->data.begin() + start + len);
    return make_node({len}, std::move(out), {a},
                     [start, len](const double* g, const std::vector<double*>& gp) {
                         for (int i = 0; i < len; ++i) gp[0][start + i] += g[i];
                     });
}

NodePtr concat(const NodePtr& a, const NodePtr& b) {
    require_rank(a, 1, "concat");
    require_rank(b, 1, "concat");
    std::vector<double> out;
    out.reserve(a->size() + b->size());
    out.insert(out.end(), a->data.begin(), a->data.end());
    out.insert(out.end(), b->data.begin(), b->data.end());
    const int na = a->shape[0], nb = b->shape[0];
    return make_node({na + nb}, std::move(out), {a, b},
                     [na, nb](const double* g, const std::vector<double*>& gp) {
                         for (int i = 0; i < na; ++i) gp[0][i] += g[i];
                         for (int i = 0; i < nb; ++i) gp[1][i] += g[na + i];
                     });
}

NodePtr relu(const NodePtr& a) {
    std::vector<double> out(a->size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->data[i] > 0.0 ? a->data[i] : 0.0;
    return make_node(a->shape, std::move(out), {a},
                     [pa = a](const double* g, const std::vector<double*>& gp) {
                         // subgradient at 0 is 0; branchless so the loop vectorizes
                         for (std::size_t i = 0; i < pa->size(); ++i)
                             gp[0][i] += pa->data[i] > 0.0 ? g[i] : 0.0;
                     });
}

NodePtr square(const NodePtr& a) {
    std::vector<double> out(a->size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->data[i] * a->data[i];
    return make_node(a->shape, std::move(out), {a},
                     [pa = a](const double* g, const std::vector<double*>& gp) {
                         for (std::size_t i = 0; i < pa->size(); ++i)
                             gp[0][i] += 2.0 * pa->data[i] * g[i];
                     });
}

NodePtr sqrt_elem(const NodePtr& a) {
    std::vector<double> out(a->size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (a->data[i] < 0.0)
            throw DegenerateError("sqrt of negative value " + std::to_string(a->data[i]));
        out[i] = std::sqrt(a->data[i]);
    }
    auto result = make_node(a->shape, std::move(out), {a}, nullptr);
    result->backprop = [pr = result.get()](const double* g, const std::vector<double*>& gp) {
        for (std::size_t i = 0; i < pr->size(); ++i)
            gp[0][i] += g[i] / (2.0 * pr->data[i]);
    };
    return result;
}

NodePtr sum(const NodePtr& a) {
    double s = 0.0;
    for (double v : a->data) s += v;
    return make_node({1}, {s}, {a},
                     [n = a->size()](const double* g, const std::vector<double*>& gp) {
                         for (std::size_t i = 0; i < n; ++i) gp[0][i] += g[0];
                     });
}

NodePtr mean(const NodePtr& a) {
    if (a->size() == 0) throw EmptyInputError("mean of empty tensor");
    double s = 0.0;
    for (double v : a->data) s += v;
    const double inv = 1.0 / static_cast<double>(a->size());
    return make_node({1}, {s * inv}, {a},
                     [inv, n = a->size()](const double* g, const std::vector<double*>& gp) {
                         for (std::size_t i = 0; i < n; ++i) gp[0][i] += g[0] * inv;
                     });
}

NodePtr max_over_points(const NodePtr& a) {
    require_rank(a, 2, "max_over_points");
    const int f = a->shape[0], n = a->shape[1];
    if (n < 1) throw EmptyInputError("max_over_points over zero points");
    std::vector<double> out(f);
    std::vector<int> arg(f);
    for (int r = 0; r < f; ++r) {
        const double* row = a->data.data() + static_cast<std::size_t>(r) * n;
        double best = row[0];
        int bi = 0;
        for (int j = 1; j < n; ++j)
            if (row[j] > best) {  // strict: first index wins ties
                best = row[j];
                bi = j;
            }
        out[r] = best;
        arg[r] = bi;
    }
    return make_node({f}, std::move(out), {a},
                     [arg = std::move(arg), n](const double* g, const std::vector<double*>& gp) {
                         for (std::size_t r = 0; r < arg.size(); ++r)
                             gp[0][r * n + arg[r]] += g[r];
                     });
}

NodePtr dot(const NodePtr& a, const NodePtr& b) {
    require_rank(a, 1, "dot");
    require_same_shape(a, b, "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a->size(); ++i) s += a->data[i] * b->data[i];
    return make_node({1}, {s}, {a, b},
                     [pa = a, pb = b](const double* g, const std::vector<double*>& gp) {
                         for (std::size_t i = 0; i < pa->size(); ++i) {
                             gp[0][i] += g[0] * pb->data[i];
                             gp[1][i] += g[0] * pa->data[i];
                         }
                     });
}

NodePtr cross3(const NodePtr& a, const NodePtr& b) {
    if (a->shape != Shape{3} || b->shape != Shape{3})
        throw ShapeError("cross3: both operands must have shape [3], got " +
                         shape_str(a->shape) + " and " + shape_str(b->shape));
    const auto& x = a->data;
    const auto& y = b->data;
    std::vector<double> out = {x[1] * y[2] - x[2] * y[1],
                               x[2] * y[0] - x[0] * y[2],
                               x[0] * y[1] - x[1] * y[0]};
    return make_node({3}, std::move(out), {a, b},
                     [pa = a, pb = b](const double* g, const std::vector<double*>& gp) {
                         const auto& u = pa->data;
                         const auto& v = pb->data;
                         // grad_a = b × g, grad_b = g × a
                         gp[0][0] += v[1] * g[2] - v[2] * g[1];
                         gp[0][1] += v[2] * g[0] - v[0] * g[2];
                         gp[0][2] += v[0] * g[1] - v[1] * g[0];
                         gp[1][0] += g[1] * u[2] - g[2] * u[1];
                         gp[1][1] += g[2] * u[0] - g[0] * u[2];
                         gp[1][2] += g[0] * u[1] - g[1] * u[0];
                     });
}

NodePtr normalize3(const NodePtr& a) {
    if (a->shape != Shape{3})
        throw ShapeError("normalize3: operand must have shape [3], got " + shape_str(a->shape));
    const double nrm = std::sqrt(a->data[0] * a->data[0] + a->data[1] * a->data[1] +
                                 a->data[2] * a->data[2]);
    if (!(nrm > kNormEps))
        throw DegenerateError("normalize3: vector norm " + std::to_string(nrm) +
                              " below " + std::to_string(kNormEps));
    std::vector<double> out = {a->data[0] / nrm, a->data[1] / nrm, a->data[2] / nrm};
    std::vector<double> y = out;
    return make_node({3}, std::move(out), {a},
                     [nrm, y = std::move(y)](const double* g, const std::vector<double*>& gp) {
                         const double gy = g[0] * y[0] + g[1] * y[1] + g[2] * y[2];
                         for (int i = 0; i < 3; ++i) gp[0][i] += (g[i] - gy * y[i]) / nrm;
                     });
}

void backward(const NodePtr& root) {
    if (!root) throw Error("backward on null node");
    if (!root->is_scalar())
        throw ShapeError("backward requires a scalar root, got " + shape_str(root->shape));

    // Unique tag per pass; distinct graphs may run backward concurrently, but
    // a single graph is confined to one worker at a time.
    static std::atomic<std::uint64_t> pass_counter{0};
    const std::uint64_t tag = ++pass_counter;

    // Reverse topological order via iterative postorder DFS. Parents are
    // visited in construction order, so the walk is deterministic.
    std::vector<Node*> order;
    struct Frame {
        Node* node;
        std::size_t next_parent;
    };
    std::vector<Frame> stack;
    stack.push_back({root.get(), 0});
    root->visit_tag = tag;
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.next_parent < f.node->parents.size()) {
            Node* p = f.node->parents[f.next_parent++].get();
            if (p->visit_tag != tag) {
                p->visit_tag = tag;
                stack.push_back({p, 0});
            }
        } else {
            order.push_back(f.node);
            stack.pop_back();
        }
    }
    // order is postorder: every node appears after its parents; walking it
    // backwards propagates from the root down.

    // Interior grads are pass-local: reset them. Leaf grads persist so that
    // gradients accumulate across graphs sharing the same parameters.
    for (Node* n : order) {
        if (n->backprop)
            n->grad.assign(n->size(), 0.0);
        else if (n->grad.empty())
            n->grad.assign(n->size(), 0.0);
    }
    root->grad[0] += 1.0;

    std::vector<double*> gparents;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (!n->backprop) continue;
        gparents.clear();
        for (const auto& p : n->parents) gparents.push_back(p->grad.data());
        n->backprop(n->grad.data(), gparents);
    }
}

Parameter::Parameter(std::string name_, Shape shape, std::vector<double> init)
    : name(std::move(name_)),
      node(leaf(std::move(shape), std::move(init))),
      adam_m(node->size(), 0.0),
      adam_v(node->size(), 0.0) {
    node->grad.assign(node->size(), 0.0);  // parameters always expose a grad buffer
}

void adam_step(std::span<Parameter* const> params, const AdamConfig& cfg) {
    for (Parameter* p : params) {
        for (double g : p->node->grad)
            if (!std::isfinite(g))
                throw DivergenceError("non-finite gradient in parameter '" + p->name + "'");
    }
    for (Parameter* p : params) {
        p->step_count += 1;
        auto& grad = p->node->grad;
        // empty grad means zero; with untouched Adam state the update is an
        // exact no-op, so parameters outside the current graph stay put
        if (grad.empty() && !p->adam_active) continue;
        const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(p->step_count));
        const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(p->step_count));
        auto& data = p->node->data;
        bool any_nonzero = false;
        for (std::size_t i = 0; i < data.size(); ++i) {
            const double g = grad.empty() ? 0.0 : grad[i];
            if (g != 0.0) any_nonzero = true;
            p->adam_m[i] = cfg.beta1 * p->adam_m[i] + (1.0 - cfg.beta1) * g;
            p->adam_v[i] = cfg.beta2 * p->adam_v[i] + (1.0 - cfg.beta2) * g * g;
            const double mhat = p->adam_m[i] / bc1;
            const double vhat = p->adam_v[i] / bc2;
            data[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
        }
        if (any_nonzero) p->adam_active = true;
        grad.clear();
    }
}

void zero_grad(std::span<Parameter* const> params) {
    for (Parameter* p : params) p->node->grad.clear();
}

} // namespace art::diff
