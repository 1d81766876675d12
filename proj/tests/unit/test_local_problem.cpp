#include <doctest.h>

#include <random>

#include "apts/local_problem.hpp"
#include "apts/network.hpp"
#include "fixtures.hpp"

using namespace apts;

namespace {

FunctionObjective sum_of_squares() {
  return FunctionObjective(2, [](const ParamVector& t, const BatchRef&) {
    return Evaluation{t[0] * t[0] + t[1] * t[1], ParamVector{2 * t[0], 2 * t[1]}};
  });
}

FunctionObjective square_of_sum() {
  return FunctionObjective(2, [](const ParamVector& t, const BatchRef&) {
    const double s = t[0] + t[1];
    return Evaluation{s * s, ParamVector{2 * s, 2 * s}};
  });
}

}  // namespace

TEST_CASE("restricted evaluation freezes the other coordinates") {
  const Partition p(2, {{0}, {1}});
  const auto f = sum_of_squares();
  const ParamVector anchor{1, 1};
  const LocalObjective lo(f, p, 0, anchor, f.evaluate(anchor, BatchRef::full()).grad, BatchRef::full());
  const auto e = lo.restricted_eval({2}, BatchRef::full());
  CHECK(e.loss == 5.0);
  CHECK(e.grad == ParamVector{4});
  CHECK(lo.dim() == 1);

  const auto g = square_of_sum();
  const ParamVector anchor2{1, 0};
  const LocalObjective lo2(g, p, 0, anchor2, g.evaluate(anchor2, BatchRef::full()).grad, BatchRef::full());
  CHECK(lo2.restricted_eval({3}, BatchRef::full()).loss == 9.0);
}

TEST_CASE("single subdomain reproduces the base objective") {
  std::mt19937_64 rng(1);
  auto r = rosenbrock_objective();
  const Partition p(2, {{0, 1}});
  const ParamVector anchor{0.5, -0.2};
  const LocalObjective lo(*r, p, 0, anchor, r->evaluate(anchor, BatchRef::full()).grad, BatchRef::full());
  for (int i = 0; i < 20; ++i) {
    const auto x = fixtures::random_theta(rng, 2);
    const auto a = lo.restricted_eval(x, BatchRef::full());
    const auto b = r->evaluate(x, BatchRef::full());
    CHECK(a.loss == b.loss);
    CHECK(a.grad == b.grad);
  }
}

TEST_CASE("correction vanishes for exact restrictions on the same batch") {
  std::mt19937_64 rng(2);
  const auto net = std::make_shared<const Mlp>(MlpSpec::parse("3-5-4-3", Activation::tanh, Activation::softmax_xent));
  const auto data = fixtures::random_classification(rng, 16, 3, 3);
  const NetworkObjective obj(net, data);
  const auto anchor = net->init_parameters(3);
  const auto batch = BatchRef::of({1, 4, 5, 9});
  const auto grad = obj.evaluate(anchor, batch).grad;
  const auto p = make_even_partition(obj.dim(), 3);
  for (std::size_t d = 0; d < 3; ++d) {
    const LocalObjective lo(obj, p, d, anchor, grad, batch);
    CHECK(norm(lo.correction(), Norm::Linf) <= 1e-12);
    const auto x = lo.anchor_restricted() + fixtures::random_theta(rng, lo.dim(), 0.1);
    const auto a = lo.consistent_eval(x, batch);
    const auto b = lo.restricted_eval(x, batch);
    CHECK(std::abs(a.loss - b.loss) <= 1e-12);
    CHECK(norm(a.grad - b.grad, Norm::Linf) <= 1e-12);
  }
}

TEST_CASE("value and gradient at the anchor") {
  auto r = rosenbrock_objective();
  const Partition p(2, {{1}, {0}});
  const ParamVector anchor{-1.2, 1};
  const auto g = r->evaluate(anchor, BatchRef::full()).grad;
  const LocalObjective lo(*r, p, 1, anchor, g, BatchRef::full());
  const auto e = lo.consistent_eval(lo.anchor_restricted(), BatchRef::full());
  CHECK(e.loss == r->evaluate(anchor, BatchRef::full()).loss);
  CHECK(e.grad == ParamVector{g[0]});
}

TEST_CASE("full-batch correction with sub-batch evaluation keeps the full gradient at the anchor") {
  std::mt19937_64 rng(5);
  const auto net = std::make_shared<const Mlp>(MlpSpec::parse("2-6-2", Activation::tanh, Activation::softmax_xent));
  const auto data = fixtures::random_classification(rng, 20, 2, 2);
  const NetworkObjective obj(net, data);
  const auto anchor = fixtures::random_theta(rng, obj.dim());
  const auto full_grad = obj.evaluate(anchor, BatchRef::full()).grad;
  const auto sub = BatchRef::of({0, 3, 7, 8, 15});
  const auto p = make_even_partition(obj.dim(), 2);
  for (std::size_t d = 0; d < 2; ++d) {
    const LocalObjective lo(obj, p, d, anchor, full_grad, sub);
    CHECK(norm(lo.correction(), Norm::Linf) > 0.0);
    const auto e = lo.consistent_eval(lo.anchor_restricted(), sub);
    CHECK(norm(e.grad - restrict_to(p, d, full_grad), Norm::Linf) <= 1e-12);
  }
}

TEST_CASE("consistent and restricted values differ by a linear term") {
  std::mt19937_64 rng(6);
  auto r = rosenbrock_objective();
  const Partition p(2, {{0}, {1}});
  const ParamVector anchor{0.3, 0.4};
  // A perturbed anchor gradient makes the correction nonzero.
  const ParamVector fake_grad = r->evaluate(anchor, BatchRef::full()).grad + ParamVector{0.5, -0.25};
  const LocalObjective lo(*r, p, 0, anchor, fake_grad, BatchRef::full());
  CHECK(lo.correction()[0] == doctest::Approx(0.5));
  for (int i = 0; i < 20; ++i) {
    const auto x = fixtures::random_theta(rng, 1);
    const auto a = lo.consistent_eval(x, BatchRef::full());
    const auto b = lo.restricted_eval(x, BatchRef::full());
    CHECK(a.loss - b.loss == doctest::Approx(dot(lo.correction(), x - lo.anchor_restricted())).epsilon(1e-12));
    CHECK(norm(a.grad - b.grad - lo.correction(), Norm::Linf) <= 1e-12);
  }
}

TEST_CASE("first-order consistency on random networks and partitions") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 25; ++trial) {
    const auto net = std::make_shared<const Mlp>(fixtures::random_spec(rng, 3, 5, true));
    const auto data = fixtures::random_classification(rng, 8, net->input_dim(), net->output_dim());
    const NetworkObjective obj(net, data);
    const auto anchor = fixtures::random_theta(rng, obj.dim());
    const auto grad = obj.evaluate(anchor, BatchRef::full()).grad;
    const std::size_t parts = std::min<std::size_t>(obj.dim(), 1 + static_cast<std::size_t>(trial % 4));
    const auto p = make_even_partition(obj.dim(), parts);
    for (std::size_t d = 0; d < parts; ++d) {
      const LocalObjective lo(obj, p, d, anchor, grad, BatchRef::of({0, 2, 5}));
      const auto e = lo.evaluate(lo.anchor_restricted(), BatchRef::of({0, 2, 5}));
      CHECK(norm(e.grad - restrict_to(p, d, grad), Norm::Linf) <= 1e-12);
    }
  }
}

TEST_CASE("dimension errors") {
  const auto f = sum_of_squares();
  const Partition p(2, {{0}, {1}});
  const ParamVector anchor{1, 1};
  const LocalObjective lo(f, p, 0, anchor, ParamVector{2, 2}, BatchRef::full());
  CHECK_THROWS_AS(lo.restricted_eval({1, 2}, BatchRef::full()), DimensionError);
  CHECK_THROWS_AS(lo.consistent_eval({1, 2}, BatchRef::full()), DimensionError);
  CHECK_THROWS_AS(LocalObjective(f, p, 0, ParamVector{1, 1, 1}, ParamVector{2, 2}, BatchRef::full()), DimensionError);
  CHECK_THROWS_AS(LocalObjective(f, p, 3, anchor, ParamVector{2, 2}, BatchRef::full()), RangeError);
}
