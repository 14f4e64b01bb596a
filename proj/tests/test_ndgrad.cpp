#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "correg/ndgrad/ops.hpp"
#include "correg/rng.hpp"
#include "testutil.hpp"

using correg::Rng;
using correg::ndgrad::Array;
using correg::ndgrad::Graph;
using correg::ndgrad::Node;
using correg::ndgrad::ShapeMismatch;

namespace nd = correg::ndgrad;

namespace {

// Builds a graph function from flat input values and returns the scalarized
// output: rank-0 outputs pass through, larger ones are contracted with fixed
// weights so finite differences see a scalar.
struct GradCheck {
  std::vector<std::vector<std::size_t>> shapes;  // per input
  std::function<Node(Graph&, const std::vector<Node>&)> build;

  static Array to_array(const std::vector<std::size_t>& shape, const std::vector<double>& flat,
                        std::size_t& pos) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    std::vector<double> v(flat.begin() + pos, flat.begin() + pos + n);
    pos += n;
    if (shape.empty()) return Array::scalar(v[0]);
    if (shape.size() == 1) return Array::vector(v);
    return Array::matrix(shape[0], shape[1], v);
  }

  double value(const std::vector<double>& flat, const std::vector<double>& weights) const {
    Graph g;
    std::vector<Node> inputs;
    std::size_t pos = 0;
    for (const auto& s : shapes) inputs.push_back(g.variable(to_array(s, flat, pos)));
    Node out = build(g, inputs);
    if (out.value().rank() == 0) return out.value()[0];
    double acc = 0.0;
    for (std::size_t i = 0; i < out.value().size(); ++i) acc += weights[i] * out.value()[i];
    return acc;
  }

  // Analytic gradient of the scalarized output w.r.t. the flat inputs.
  std::vector<double> analytic(const std::vector<double>& flat,
                               const std::vector<double>& weights) const {
    Graph g;
    std::vector<Node> inputs;
    std::size_t pos = 0;
    for (const auto& s : shapes) inputs.push_back(g.variable(to_array(s, flat, pos)));
    Node out = build(g, inputs);
    Node root = out;
    if (out.value().rank() == 1) {
      root = nd::sum(nd::mul(out, g.constant(Array::vector(weights))));
    } else if (out.value().rank() == 2) {
      root = nd::sum(nd::mul(
          out, g.constant(Array::matrix(out.value().rows(), out.value().cols(), weights))));
    }
    g.backward(root);
    std::vector<double> grad;
    for (const Node& in : inputs) {
      for (std::size_t i = 0; i < in.grad().size(); ++i) grad.push_back(in.grad()[i]);
    }
    return grad;
  }

  std::size_t flat_size() const {
    std::size_t n = 0;
    for (const auto& s : shapes) {
      std::size_t m = 1;
      for (auto d : s) m *= d;
      n += m;
    }
    return n;
  }
};

// Runs FD-vs-analytic over `trials` random draws; `sampler` fills the flat
// input respecting the op's domain.
void run_grad_check(const GradCheck& spec, std::size_t out_size,
                    const std::function<void(Rng&, std::vector<double>&)>& sampler,
                    std::size_t trials, std::uint64_t seed0) {
  double worst = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    Rng rng(seed0 + t);
    std::vector<double> flat(spec.flat_size());
    sampler(rng, flat);
    std::vector<double> weights(out_size);
    for (auto& w : weights) w = rng.uniform(-1.0, 1.0);

    const auto grad = spec.analytic(flat, weights);
    auto f = [&](const std::vector<double>& x) { return spec.value(x, weights); };
    for (std::size_t i = 0; i < flat.size(); ++i) {
      const double fd = testutil::central_diff(f, flat, i);
      worst = std::max(worst, testutil::rel_err(grad[i], fd));
    }
  }
  CAPTURE(seed0);
  CHECK(worst < 1e-4);
}

void default_sampler(Rng& rng, std::vector<double>& flat) {
  for (auto& x : flat) x = rng.uniform(-2.0, 2.0);
}

// Magnitude bounded away from zero, random sign; for kinked or guarded ops.
void signed_away_from_zero(Rng& rng, std::vector<double>& flat) {
  for (auto& x : flat) {
    const double mag = rng.uniform(0.2, 2.0);
    x = rng.uniform01() < 0.5 ? -mag : mag;
  }
}

void positive_sampler(Rng& rng, std::vector<double>& flat) {
  for (auto& x : flat) x = rng.uniform(0.1, 4.0);
}

}  // namespace

TEST_CASE("forward values: documented cases") {
  Graph g;
  Node a = g.variable(Array::vector({1.0, 0.0}));
  Node b = g.variable(Array::vector({1.0, 0.0}));
  Node c = g.variable(Array::vector({0.0, 1.0}));
  CHECK(nd::cosine_similarity(a, b).scalar_value() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(nd::cosine_similarity(a, c).scalar_value() == doctest::Approx(0.0).epsilon(1e-12));

  Node v = g.variable(Array::vector({1.0, 2.0, 3.0, 4.0}));
  CHECK(nd::variance(v).scalar_value() == doctest::Approx(1.25).epsilon(1e-15));
  CHECK(nd::mean(v).scalar_value() == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(nd::sum(v).scalar_value() == doctest::Approx(10.0).epsilon(1e-15));
}

TEST_CASE("backward: documented cases") {
  SUBCASE("d(x^2)/dx = 2x") {
    Graph g;
    Node x = g.variable(Array::scalar(3.0));
    Node y = nd::square(x);
    g.backward(y);
    CHECK(x.grad()[0] == doctest::Approx(6.0).epsilon(1e-15));
  }
  SUBCASE("mean spreads gradient uniformly") {
    Graph g;
    Node x = g.variable(Array::vector({1.0, 5.0, -2.0, 0.5}));
    g.backward(nd::mean(x));
    for (std::size_t i = 0; i < 4; ++i) CHECK(x.grad()[i] == doctest::Approx(0.25));
  }
  SUBCASE("non-scalar root rejected") {
    Graph g;
    Node x = g.variable(Array::vector({1.0, 2.0}));
    CHECK_THROWS_AS(g.backward(x), std::invalid_argument);
  }
}

TEST_CASE("backward: diamond graph accumulates both paths") {
  // y = x*x + x  =>  dy/dx = 2x + 1; x participates twice.
  Graph g;
  Node x = g.variable(Array::scalar(1.5));
  Node y = nd::add(nd::mul(x, x), x);
  g.backward(y);
  CHECK(x.grad()[0] == doctest::Approx(4.0).epsilon(1e-15));

  // deeper diamond: z = (x + x) * x => dz/dx = 4x
  Graph g2;
  Node x2 = g2.variable(Array::scalar(0.75));
  Node z = nd::mul(nd::add(x2, x2), x2);
  g2.backward(z);
  CHECK(x2.grad()[0] == doctest::Approx(3.0).epsilon(1e-15));
}

TEST_CASE("backward: repeated calls accumulate; zero_grad resets exactly") {
  Graph g;
  Node x = g.variable(Array::vector({0.3, -1.2, 2.0}));
  Node root = nd::sum(nd::square(x));
  g.backward(root);
  std::vector<double> first(x.grad().data());
  g.backward(root);
  for (std::size_t i = 0; i < 3; ++i) CHECK(x.grad()[i] == 2.0 * first[i]);
  g.zero_grad();
  g.backward(root);
  for (std::size_t i = 0; i < 3; ++i) CHECK(x.grad()[i] == first[i]);
}

TEST_CASE("detach: definitional behavior") {
  Graph g;
  Node x = g.variable(Array::vector({1.0, -2.0, 0.5}));
  Node d = g.detach(x);
  CHECK_FALSE(d.requires_grad());
  for (std::size_t i = 0; i < 3; ++i) CHECK(d.value()[i] == x.value()[i]);

  Node y = nd::sum(nd::square(d));
  CHECK_FALSE(y.requires_grad());
  g.backward(y);
  for (std::size_t i = 0; i < 3; ++i) CHECK(x.grad()[i] == 0.0);
}

TEST_CASE("requires_grad == false never accumulates") {
  Graph g;
  Node c = g.constant(Array::vector({1.0, 2.0}));
  Node x = g.variable(Array::vector({3.0, 4.0}));
  Node y = nd::sum(nd::mul(c, x));
  g.backward(y);
  CHECK(c.grad()[0] == 0.0);
  CHECK(c.grad()[1] == 0.0);
  CHECK(x.grad()[0] == 1.0);
  CHECK(x.grad()[1] == 2.0);
}

TEST_CASE("shape errors name both shapes") {
  Graph g;
  Node a = g.variable(Array::vector({1.0, 2.0}));
  Node b = g.variable(Array::vector({1.0, 2.0, 3.0}));
  try {
    nd::add(a, b);
    FAIL("expected ShapeMismatch");
  } catch (const ShapeMismatch& e) {
    const std::string msg = e.what();
    CHECK(msg.find("[2]") != std::string::npos);
    CHECK(msg.find("[3]") != std::string::npos);
  }

  Node m = g.variable(Array::matrix(2, 3, {1, 2, 3, 4, 5, 6}));
  CHECK_THROWS_AS(nd::matmul(m, m), ShapeMismatch);
  CHECK_THROWS_AS(nd::dot(a, b), ShapeMismatch);
}

TEST_CASE("construction rejects non-finite values") {
  CHECK_THROWS_AS(Array::vector({1.0, std::nan("")}), std::invalid_argument);
  CHECK_THROWS_AS(Array::scalar(std::numeric_limits<double>::infinity()),
                  std::invalid_argument);
  CHECK_THROWS_AS(Array::vector({}), std::invalid_argument);
}

TEST_CASE("division guard keeps degenerate denominators finite") {
  Graph g;
  Node num = g.variable(Array::scalar(0.0));
  Node den = g.variable(Array::scalar(0.0));
  Node q = nd::div(num, den);
  CHECK(q.scalar_value() == 0.0);
  g.backward(q);
  CHECK(std::isfinite(num.grad()[0]));
  CHECK(std::isfinite(den.grad()[0]));

  // zero-norm cosine: finite with the guard, error with the guard disabled
  Node z = g.variable(Array::vector({0.0, 0.0}));
  Node u = g.variable(Array::vector({1.0, 0.0}));
  CHECK(nd::cosine_similarity(z, u).scalar_value() == 0.0);
  CHECK_THROWS_AS(nd::cosine_similarity(z, u, 0.0), std::domain_error);
}

TEST_CASE("matmul value cases") {
  Graph g;
  Node a = g.variable(Array::matrix(2, 3, {1, 2, 3, 4, 5, 6}));
  Node b = g.variable(Array::matrix(3, 2, {7, 8, 9, 10, 11, 12}));
  Node c = nd::matmul(a, b);
  CHECK(c.value().at(0, 0) == 58.0);
  CHECK(c.value().at(0, 1) == 64.0);
  CHECK(c.value().at(1, 0) == 139.0);
  CHECK(c.value().at(1, 1) == 154.0);

  Node v = g.variable(Array::vector({1.0, 0.5, -1.0}));
  Node mv = nd::matmul(a, v);
  CHECK(mv.value()[0] == doctest::Approx(1.0 + 1.0 - 3.0));
  CHECK(mv.value()[1] == doctest::Approx(4.0 + 2.5 - 6.0));

  Node w = g.variable(Array::vector({2.0, -1.0}));
  Node vm = nd::matmul(w, a);
  CHECK(vm.value()[0] == doctest::Approx(2.0 - 4.0));
  CHECK(vm.value()[1] == doctest::Approx(4.0 - 5.0));
  CHECK(vm.value()[2] == doctest::Approx(6.0 - 6.0));
}

TEST_CASE("stack and gather route gradients per slot") {
  Graph g;
  Node s0 = g.variable(Array::scalar(1.0));
  Node s1 = g.variable(Array::scalar(2.0));
  Node s2 = g.variable(Array::scalar(3.0));
  Node v = nd::stack({s0, s1, s2});
  CHECK(v.value().rank() == 1);
  CHECK(v.value()[1] == 2.0);

  Node picked = nd::gather(v, {2, 0, 2});
  CHECK(picked.value()[0] == 3.0);
  CHECK(picked.value()[1] == 1.0);
  Node root = nd::sum(nd::mul(picked, g.constant(Array::vector({1.0, 10.0, 100.0}))));
  g.backward(root);
  CHECK(s0.grad()[0] == 10.0);
  CHECK(s1.grad()[0] == 0.0);
  CHECK(s2.grad()[0] == 101.0);

  CHECK_THROWS_AS(nd::gather(v, {5}), std::out_of_range);
}

TEST_CASE("gradient check: elementwise and reduction ops") {
  const std::size_t kTrials = 100;
  auto unary = [](auto opfn) {
    return GradCheck{{{5}}, [opfn](Graph&, const std::vector<Node>& in) { return opfn(in[0]); }};
  };
  auto binary = [](auto opfn) {
    return GradCheck{{{5}, {5}},
                     [opfn](Graph&, const std::vector<Node>& in) { return opfn(in[0], in[1]); }};
  };

  run_grad_check(binary([](Node a, Node b) { return nd::add(a, b); }), 5, default_sampler,
                 kTrials, 100);
  run_grad_check(binary([](Node a, Node b) { return nd::sub(a, b); }), 5, default_sampler,
                 kTrials, 200);
  run_grad_check(binary([](Node a, Node b) { return nd::mul(a, b); }), 5, default_sampler,
                 kTrials, 300);
  run_grad_check(binary([](Node a, Node b) { return nd::div(a, b); }), 5, signed_away_from_zero,
                 kTrials, 400);

  run_grad_check(unary([](Node a) { return nd::square(a); }), 5, default_sampler, kTrials, 500);
  run_grad_check(unary([](Node a) { return nd::tanh(a); }), 5, default_sampler, kTrials, 600);
  run_grad_check(unary([](Node a) { return nd::abs(a); }), 5, signed_away_from_zero, kTrials,
                 700);
  run_grad_check(unary([](Node a) { return nd::relu(a); }), 5, signed_away_from_zero, kTrials,
                 800);
  run_grad_check(unary([](Node a) { return nd::max_with_zero(a); }), 5, signed_away_from_zero,
                 kTrials, 900);
  run_grad_check(unary([](Node a) { return nd::sqrt(a); }), 5, positive_sampler, kTrials, 1000);
  run_grad_check(unary([](Node a) { return nd::scalar_mul(-1.7, a); }), 5, default_sampler,
                 kTrials, 1100);

  run_grad_check(
      GradCheck{{{6}}, [](Graph&, const std::vector<Node>& in) { return nd::sum(in[0]); }}, 1,
      default_sampler, kTrials, 1200);
  run_grad_check(
      GradCheck{{{6}}, [](Graph&, const std::vector<Node>& in) { return nd::mean(in[0]); }}, 1,
      default_sampler, kTrials, 1300);
  run_grad_check(
      GradCheck{{{6}}, [](Graph&, const std::vector<Node>& in) { return nd::variance(in[0]); }},
      1, default_sampler, kTrials, 1400);
}

TEST_CASE("gradient check: scalar broadcast variants") {
  const std::size_t kTrials = 100;
  auto scalar_vec = [](auto opfn) {
    return GradCheck{{{}, {4}},
                     [opfn](Graph&, const std::vector<Node>& in) { return opfn(in[0], in[1]); }};
  };
  auto vec_scalar = [](auto opfn) {
    return GradCheck{{{4}, {}},
                     [opfn](Graph&, const std::vector<Node>& in) { return opfn(in[0], in[1]); }};
  };
  run_grad_check(scalar_vec([](Node a, Node b) { return nd::add(a, b); }), 4, default_sampler,
                 kTrials, 2100);
  run_grad_check(vec_scalar([](Node a, Node b) { return nd::sub(a, b); }), 4, default_sampler,
                 kTrials, 2200);
  run_grad_check(scalar_vec([](Node a, Node b) { return nd::mul(a, b); }), 4, default_sampler,
                 kTrials, 2300);
  run_grad_check(vec_scalar([](Node a, Node b) { return nd::div(a, b); }), 4,
                 signed_away_from_zero, kTrials, 2400);
  run_grad_check(scalar_vec([](Node a, Node b) { return nd::div(a, b); }), 4,
                 signed_away_from_zero, kTrials, 2500);
}

TEST_CASE("gradient check: pair and matrix ops") {
  const std::size_t kTrials = 100;
  run_grad_check(GradCheck{{{5}, {5}},
                           [](Graph&, const std::vector<Node>& in) {
                             return nd::dot(in[0], in[1]);
                           }},
                 1, default_sampler, kTrials, 3100);
  run_grad_check(GradCheck{{{5}},
                           [](Graph&, const std::vector<Node>& in) {
                             return nd::l2_norm(in[0]);
                           }},
                 1, signed_away_from_zero, kTrials, 3200);
  run_grad_check(GradCheck{{{5}, {5}},
                           [](Graph&, const std::vector<Node>& in) {
                             return nd::cosine_similarity(in[0], in[1]);
                           }},
                 1, signed_away_from_zero, kTrials, 3300);

  run_grad_check(GradCheck{{{3, 4}, {4, 2}},
                           [](Graph&, const std::vector<Node>& in) {
                             return nd::matmul(in[0], in[1]);
                           }},
                 6, default_sampler, kTrials, 3400);
  run_grad_check(GradCheck{{{3, 4}, {4}},
                           [](Graph&, const std::vector<Node>& in) {
                             return nd::matmul(in[0], in[1]);
                           }},
                 3, default_sampler, kTrials, 3500);
  run_grad_check(GradCheck{{{4}, {4, 3}},
                           [](Graph&, const std::vector<Node>& in) {
                             return nd::matmul(in[0], in[1]);
                           }},
                 3, default_sampler, kTrials, 3600);

  run_grad_check(GradCheck{{{}, {}, {}},
                           [](Graph&, const std::vector<Node>& in) {
                             return nd::stack({in[0], in[1], in[2]});
                           }},
                 3, default_sampler, kTrials, 3700);
  run_grad_check(GradCheck{{{5}},
                           [](Graph&, const std::vector<Node>& in) {
                             return nd::gather(in[0], {4, 0, 2, 2});
                           }},
                 4, default_sampler, kTrials, 3800);
}

TEST_CASE("gradient check: composite expression with shared subgraphs") {
  // f(x, y) = cos_sim(x, y)^2 + mean(x) * variance(y); exercises reuse.
  const std::size_t kTrials = 50;
  run_grad_check(GradCheck{{{6}, {6}},
                           [](Graph&, const std::vector<Node>& in) {
                             Node cs = nd::cosine_similarity(in[0], in[1]);
                             return nd::add(nd::square(cs),
                                            nd::mul(nd::mean(in[0]), nd::variance(in[1])));
                           }},
                 1, signed_away_from_zero, kTrials, 4100);
}
