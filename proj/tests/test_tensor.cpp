#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "art/errors.hpp"
#include "art/tensor.hpp"
#include "testutil.hpp"

#include <cmath>

using namespace art::diff;
using art::Rng;
using testutil::fd_worst_error;
using testutil::random_vector;

namespace {

// Weighted sum turns any op output into a scalar with a non-uniform upstream
// gradient, which exercises the backward rule properly.
NodePtr weighted(const NodePtr& out, const std::vector<double>& w) {
    NodePtr flat = out->shape.size() == 1 ? out : reshape(out, {static_cast<int>(out->size())});
    return dot(flat, leaf({static_cast<int>(w.size())}, w));
}

} // namespace

TEST_CASE("matmul worked examples") {
    NodePtr i2 = leaf({2, 2}, {1, 0, 0, 1});
    NodePtr m = leaf({2, 2}, {1, 2, 3, 4});
    NodePtr prod = matmul(i2, m);
    CHECK(prod->data == std::vector<double>{1, 2, 3, 4});

    NodePtr a = leaf({1, 2}, {1, 2});
    NodePtr b = leaf({2, 1}, {3, 4});
    CHECK(matmul(a, b)->data == std::vector<double>{11});
}

TEST_CASE("matmul gradient matches the hand result and finite differences") {
    NodePtr a = leaf({1, 2}, {1, 2});
    NodePtr b = leaf({2, 1}, {3, 4});
    NodePtr loss = sum(matmul(a, b));
    backward(loss);
    CHECK(a->grad[0] == doctest::Approx(3.0));
    CHECK(a->grad[1] == doctest::Approx(4.0));

    auto forward = [](const std::vector<double>& av) {
        NodePtr an = leaf({1, 2}, av);
        NodePtr bn = leaf({2, 1}, {3, 4});
        return sum(matmul(an, bn))->value();
    };
    CHECK(fd_worst_error(forward, {1, 2}, a->grad) < 1e-4);
}

TEST_CASE("matmul shape error names both shapes") {
    NodePtr a = leaf({2, 3}, std::vector<double>(6, 1.0));
    NodePtr b = leaf({4, 5}, std::vector<double>(20, 1.0));
    CHECK_THROWS_WITH_AS(matmul(a, b),
                         "matmul: inner dimensions disagree: [2,3] x [4,5]",
                         art::ShapeError);
}

TEST_CASE("relu examples and kink convention") {
    NodePtr x = leaf({3}, {-1, 0, 2});
    CHECK(relu(x)->data == std::vector<double>{0, 0, 2});

    NodePtr pos = leaf({3}, {0.5, 1, 2});
    CHECK(relu(pos)->data == std::vector<double>{0.5, 1, 2});

    NodePtr y = leaf({2}, {-1, 2});
    backward(sum(relu(y)));
    CHECK(y->grad == std::vector<double>{0, 1});

    auto forward = [](const std::vector<double>& v) {
        return sum(relu(leaf({2}, v)))->value();
    };
    CHECK(fd_worst_error(forward, {-1, 2}, y->grad) < 1e-4);
}

TEST_CASE("max_over_points forward, gradient routing, permutation invariance") {
    NodePtr a = leaf({1, 3}, {1, 3, 2});
    NodePtr m = max_over_points(a);
    CHECK(m->data == std::vector<double>{3});
    backward(sum(m));
    CHECK(a->grad == std::vector<double>{0, 1, 0});

    NodePtr single = leaf({2, 1}, {4, 5});
    CHECK(max_over_points(single)->data == std::vector<double>{4, 5});

    NodePtr empty_like = leaf({2, 0}, {});
    CHECK_THROWS_AS(max_over_points(empty_like), art::EmptyInputError);

    // permuting the point columns leaves the forward value unchanged
    Rng rng(7);
    const int f = 4, n = 9;
    auto vals = random_vector(static_cast<std::size_t>(f) * n, rng);
    NodePtr orig = max_over_points(leaf({f, n}, vals));
    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = (i * 5 + 3) % n;
    std::vector<double> shuffled(vals.size());
    for (int r = 0; r < f; ++r)
        for (int i = 0; i < n; ++i) shuffled[r * n + i] = vals[r * n + perm[i]];
    NodePtr permuted = max_over_points(leaf({f, n}, shuffled));
    for (int r = 0; r < f; ++r) CHECK(orig->data[r] == permuted->data[r]);

    // first index wins ties
    NodePtr tie = leaf({1, 3}, {5, 5, 1});
    NodePtr mt = max_over_points(tie);
    backward(sum(mt));
    CHECK(tie->grad == std::vector<double>{1, 0, 0});
}

TEST_CASE("elementwise ops worked examples") {
    NodePtr v = leaf({3}, {2, 0, 0});
    CHECK(normalize3(v)->data == std::vector<double>{1, 0, 0});

    NodePtr ex = leaf({3}, {1, 0, 0});
    NodePtr ey = leaf({3}, {0, 1, 0});
    CHECK(cross3(ex, ey)->data == std::vector<double>{0, 0, 1});

    NodePtr x = leaf({2}, {1, 2});
    backward(sum(square(x)));
    CHECK(x->grad[0] == doctest::Approx(2.0));
    CHECK(x->grad[1] == doctest::Approx(4.0));

    NodePtr tiny = leaf({3}, {1e-9, 0, 0});
    CHECK_THROWS_AS(normalize3(tiny), art::DegenerateError);
}

TEST_CASE("backward basics") {
    NodePtr c = scalar(3.0);
    backward(c);
    CHECK(c->grad[0] == 1.0);

    NodePtr x = leaf({3}, {1, 2, 3});
    backward(sum(x));
    CHECK(x->grad == std::vector<double>{1, 1, 1});

    NodePtr mat = leaf({2, 2}, {1, 2, 3, 4});
    CHECK_THROWS_AS(backward(mat), art::ShapeError);
}

TEST_CASE("backward on a two-layer composition matches finite differences") {
    Rng rng(11);
    const std::vector<double> w1 = random_vector(6, rng);
    const std::vector<double> w2 = random_vector(6, rng);
    const std::vector<double> x0 = random_vector(2, rng, 0.3, 1.5);  // keep relus active

    auto build = [&](const std::vector<double>& xv) {
        NodePtr x = leaf({2}, xv);
        NodePtr h = relu(matmul(leaf({3, 2}, w1), x));
        NodePtr y = matmul(leaf({2, 3}, w2), h);
        return sum(square(y));
    };
    NodePtr x = leaf({2}, x0);
    NodePtr h = relu(matmul(leaf({3, 2}, w1), x));
    NodePtr root = sum(square(matmul(leaf({2, 3}, w2), h)));
    backward(root);
    auto forward = [&](const std::vector<double>& xv) { return build(xv)->value(); };
    CHECK(fd_worst_error(forward, x0, x->grad) < 1e-4);
}

TEST_CASE("repeated backward calls accumulate") {
    NodePtr x = leaf({2}, {1, 2});
    NodePtr root = sum(square(x));
    backward(root);
    backward(root);
    CHECK(x->grad[0] == doctest::Approx(4.0));
    CHECK(x->grad[1] == doctest::Approx(8.0));
}

TEST_CASE("backward is deterministic") {
    auto run = [] {
        Rng rng(99);
        NodePtr x = leaf({4}, random_vector(4, rng));
        NodePtr w = leaf({4, 4}, random_vector(16, rng));
        NodePtr root = sum(square(relu(matmul(w, x))));
        backward(root);
        return std::make_pair(x->grad, w->grad);
    };
    const auto a = run();
    const auto b = run();
    CHECK(a.first == b.first);
    CHECK(a.second == b.second);
}

TEST_CASE("randomized gradient checks for every op") {
    Rng rng(123);
    const int points = 5;
    for (int rep = 0; rep < points; ++rep) {
        // add / sub / mul / scale / square / sum / mean / dot / concat / slice
        {
            const auto av = random_vector(6, rng);
            const auto bv = random_vector(6, rng);
            const auto w = random_vector(6, rng);
            auto forward = [&](const std::vector<double>& x) {
                NodePtr a = leaf({6}, x);
                NodePtr b = leaf({6}, bv);
                NodePtr out = add(mul(a, b), scale(sub(a, b), 0.7));
                return weighted(out, w)->value();
            };
            NodePtr a = leaf({6}, av);
            NodePtr b = leaf({6}, bv);
            backward(weighted(add(mul(a, b), scale(sub(a, b), 0.7)), w));
            CHECK(fd_worst_error(forward, av, a->grad) < 1e-4);
        }
        {
            const auto av = random_vector(5, rng);
            auto forward = [&](const std::vector<double>& x) {
                NodePtr a = leaf({5}, x);
                return add(sum(square(a)), mean(a))->value();
            };
            NodePtr a = leaf({5}, av);
            backward(add(sum(square(a)), mean(a)));
            CHECK(fd_worst_error(forward, av, a->grad) < 1e-4);
        }
        {
            const auto av = random_vector(4, rng);
            const auto bv = random_vector(3, rng);
            const auto w = random_vector(7, rng);
            auto forward = [&](const std::vector<double>& x) {
                NodePtr out = concat(leaf({4}, x), leaf({3}, bv));
                return weighted(out, w)->value();
            };
            NodePtr a = leaf({4}, av);
            backward(weighted(concat(a, leaf({3}, bv)), w));
            CHECK(fd_worst_error(forward, av, a->grad) < 1e-4);
        }
        {
            const auto av = random_vector(8, rng);
            const auto w = random_vector(3, rng);
            auto forward = [&](const std::vector<double>& x) {
                return weighted(slice1d(leaf({8}, x), 2, 3), w)->value();
            };
            NodePtr a = leaf({8}, av);
            backward(weighted(slice1d(a, 2, 3), w));
            CHECK(fd_worst_error(forward, av, a->grad) < 1e-4);
        }
        // sqrt away from zero
        {
            const auto av = random_vector(4, rng, 0.5, 3.0);
            const auto w = random_vector(4, rng);
            auto forward = [&](const std::vector<double>& x) {
                return weighted(sqrt_elem(leaf({4}, x)), w)->value();
            };
            NodePtr a = leaf({4}, av);
            backward(weighted(sqrt_elem(a), w));
            CHECK(fd_worst_error(forward, av, a->grad) < 1e-4);
        }
        // matmul + transpose + add_colwise + reshape, both operands
        {
            const auto av = random_vector(6, rng);
            const auto bv = random_vector(8, rng);
            const auto biasv = random_vector(3, rng);
            const auto w = random_vector(12, rng);
            auto build = [&](const std::vector<double>& a_in, const std::vector<double>& b_in,
                             const std::vector<double>& bias_in) {
                NodePtr a = leaf({3, 2}, a_in);
                NodePtr b = leaf({2, 4}, b_in);
                NodePtr bias = leaf({3}, bias_in);
                NodePtr out = transpose2d(add_colwise(matmul(a, b), bias));
                return weighted(out, w);
            };
            NodePtr a = leaf({3, 2}, av);
            NodePtr b = leaf({2, 4}, bv);
            NodePtr bias = leaf({3}, biasv);
            NodePtr root = weighted(transpose2d(add_colwise(matmul(a, b), bias)), w);
            backward(root);
            CHECK(fd_worst_error([&](const std::vector<double>& x) {
                      return build(x, bv, biasv)->value();
                  }, av, a->grad) < 1e-4);
            CHECK(fd_worst_error([&](const std::vector<double>& x) {
                      return build(av, x, biasv)->value();
                  }, bv, b->grad) < 1e-4);
            CHECK(fd_worst_error([&](const std::vector<double>& x) {
                      return build(av, bv, x)->value();
                  }, biasv, bias->grad) < 1e-4);
        }
        // relu away from the kink
        {
            auto av = random_vector(6, rng);
            for (auto& v : av)
                if (std::abs(v) < 1e-2) v += v >= 0 ? 0.05 : -0.05;
            const auto w = random_vector(6, rng);
            auto forward = [&](const std::vector<double>& x) {
                return weighted(relu(leaf({6}, x)), w)->value();
            };
            NodePtr a = leaf({6}, av);
            backward(weighted(relu(a), w));
            CHECK(fd_worst_error(forward, av, a->grad) < 1e-4);
        }
        // max_over_points away from ties
        {
            auto av = random_vector(12, rng);
            for (int r = 0; r < 3; ++r) av[r * 4 + (r % 4)] += 2.0;  // clear winners
            const auto w = random_vector(3, rng);
            auto forward = [&](const std::vector<double>& x) {
                return weighted(max_over_points(leaf({3, 4}, x)), w)->value();
            };
            NodePtr a = leaf({3, 4}, av);
            backward(weighted(max_over_points(a), w));
            CHECK(fd_worst_error(forward, av, a->grad) < 1e-4);
        }
        // cross3 and normalize3, away from degeneracy
        {
            auto av = random_vector(3, rng);
            auto bv = random_vector(3, rng);
            av[0] += 1.5;
            bv[1] += 1.5;
            const auto w = random_vector(3, rng);
            auto build = [&](const std::vector<double>& a_in, const std::vector<double>& b_in) {
                return weighted(cross3(normalize3(leaf({3}, a_in)), leaf({3}, b_in)), w);
            };
            NodePtr a = leaf({3}, av);
            NodePtr b = leaf({3}, bv);
            backward(weighted(cross3(normalize3(a), b), w));
            CHECK(fd_worst_error([&](const std::vector<double>& x) {
                      return build(x, bv)->value();
                  }, av, a->grad) < 1e-4);
            CHECK(fd_worst_error([&](const std::vector<double>& x) {
                      return build(av, x)->value();
                  }, bv, b->grad) < 1e-4);
        }
    }
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
    Parameter p("p", {3}, {1, 2, 3});
    const auto before = p.node->data;
    adam_step(std::vector<Parameter*>{&p}, {});
    CHECK(p.node->data == before);
    CHECK(p.step_count == 1);
}

TEST_CASE("adam: first step moves each coordinate by about lr") {
    Parameter p("p", {3}, {1.0, -2.0, 0.5});
    p.node->grad = {0.3, -4.0, 1e-3};
    AdamConfig cfg;
    cfg.lr = 1e-3;
    adam_step(std::vector<Parameter*>{&p}, cfg);
    // first-step update is lr · g/(|g| + ε·√(1-β2)) ≈ lr · sign(g)
    CHECK(p.node->data[0] == doctest::Approx(1.0 - 1e-3).epsilon(1e-6));
    CHECK(p.node->data[1] == doctest::Approx(-2.0 + 1e-3).epsilon(1e-6));
    CHECK(p.node->data[2] == doctest::Approx(0.5 - 1e-3).epsilon(1e-3));
    CHECK(p.node->grad.empty());  // empty grad means zero
}

TEST_CASE("adam: constant gradient decreases the parameter monotonically") {
    Parameter p("p", {1}, {5.0});
    AdamConfig cfg;
    cfg.lr = 1e-2;
    double prev = p.node->data[0];
    for (int step = 0; step < 50; ++step) {
        p.node->grad[0] = 1.0;
        adam_step(std::vector<Parameter*>{&p}, cfg);
        CHECK(p.node->data[0] < prev);
        prev = p.node->data[0];
    }
    CHECK(p.step_count == 50);
}

TEST_CASE("adam: non-finite gradient names the parameter") {
    Parameter p("rot_head.1.w", {2}, {0, 0});
    p.node->grad = {1.0, std::nan("")};
    CHECK_THROWS_WITH_AS(adam_step(std::vector<Parameter*>{&p}, {}),
                         "non-finite gradient in parameter 'rot_head.1.w'",
                         art::DivergenceError);
}
