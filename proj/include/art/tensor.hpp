#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace art::diff {

// Dense tensor shapes. Scalars are stored as {1}; rank 1 and rank 2 cover
// everything the networks here need.
using Shape = std::vector<int>;

std::size_t numel(const Shape& s);
std::string shape_str(const Shape& s);

struct Node;
using NodePtr = std::shared_ptr<Node>;

// One value in the define-by-run computation graph. Graphs are rebuilt every
// training step; only parameter leaves survive between steps.
//
// `grad` is allocated lazily (empty means all-zero). Leaf gradients persist
// and accumulate across backward passes until the owner zeroes them
// (adam_step does so after consuming them); interior gradients are recomputed
// by each backward pass.
struct Node {
    Shape shape;
    std::vector<double> data;
    std::vector<double> grad;  // empty or same size as data
    std::vector<NodePtr> parents;
    // Adds d(root)/d(parent_i) contributions into gparents[i] given this
    // node's gradient gout. Null for leaves.
    std::function<void(const double* gout, const std::vector<double*>& gparents)> backprop;
    std::uint64_t visit_tag = 0;  // traversal bookkeeping, owned by backward()

    Node(Shape s, std::vector<double> d);
    std::size_t size() const { return data.size(); }
    bool is_scalar() const { return data.size() == 1; }
    double value() const;  // scalar convenience; ShapeError otherwise
};

// Leaf without parents. Constants and parameters are both leaves; gradient
// only matters for leaves someone reads it from.
NodePtr leaf(Shape shape, std::vector<double> data);
NodePtr scalar(double v);

// Escape hatch for custom differentiable ops defined outside this module
// (the differentiable Chamfer distance uses it).
NodePtr make_node(Shape shape, std::vector<double> data, std::vector<NodePtr> parents,
                  std::function<void(const double*, const std::vector<double*>&)> backprop);

NodePtr add(const NodePtr& a, const NodePtr& b);
// a: [F×N], bias: [F]; adds bias to every column.
NodePtr add_colwise(const NodePtr& a, const NodePtr& bias);
NodePtr sub(const NodePtr& a, const NodePtr& b);
NodePtr mul(const NodePtr& a, const NodePtr& b);  // elementwise
NodePtr scale(const NodePtr& a, double c);
// [m×k]·[k×n] -> [m×n]; also [m×k]·[k] -> [m].
NodePtr matmul(const NodePtr& a, const NodePtr& b);
NodePtr transpose2d(const NodePtr& a);
NodePtr reshape(const NodePtr& a, Shape s);
NodePtr slice1d(const NodePtr& a, int start, int len);
NodePtr concat(const NodePtr& a, const NodePtr& b);  // rank-1
NodePtr relu(const NodePtr& a);
NodePtr square(const NodePtr& a);
NodePtr sqrt_elem(const NodePtr& a);
NodePtr sum(const NodePtr& a);
NodePtr mean(const NodePtr& a);
// [F×N] -> [F]; backward routes each feature's gradient to the arg-max
// point, first index on ties.
NodePtr max_over_points(const NodePtr& a);
NodePtr dot(const NodePtr& a, const NodePtr& b);  // rank-1 -> scalar
NodePtr cross3(const NodePtr& a, const NodePtr& b);
NodePtr normalize3(const NodePtr& a);

// Norm below which normalize3 treats a vector as degenerate.
inline constexpr double kNormEps = 1e-8;

// Reverse-mode pass from a scalar root over the reachable subgraph, in
// reverse topological order. Leaf grads accumulate across calls (so a batch
// of per-shape graphs sharing parameter leaves sums their gradients);
// interior grads hold the current pass only.
void backward(const NodePtr& root);

// Trainable tensor plus Adam state.
struct Parameter {
    std::string name;
    NodePtr node;
    std::vector<double> adam_m, adam_v;
    std::int64_t step_count = 0;
    bool adam_active = false;  // set once any nonzero gradient has been seen

    Parameter(std::string name, Shape shape, std::vector<double> init);
    std::size_t size() const { return node->size(); }
};

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Bias-corrected Adam update; zeroes grads afterward. Throws DivergenceError
// naming the parameter if any gradient entry is non-finite.
void adam_step(std::span<Parameter* const> params, const AdamConfig& cfg);
void zero_grad(std::span<Parameter* const> params);

} // namespace art::diff
