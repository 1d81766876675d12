#include <doctest.h>

#include <cmath>
#include <random>

#include "apts/data.hpp"
#include "apts/network.hpp"
#include "apts/objective.hpp"
#include "fixtures.hpp"

using namespace apts;

namespace {

double max_rel_err(const ParamVector& a, const ParamVector& b) {
  const double scale = std::max({norm(a, Norm::L2), norm(b, Norm::L2), 1e-12});
  return norm(a - b, Norm::L2) / scale;
}

}  // namespace

TEST_CASE("quadratic objective values") {
  const BatchRef all = BatchRef::full();
  auto q1 = quadratic_objective({1, 1}, {0, 0});
  auto e = q1->evaluate({2, 0}, all);
  CHECK(e.loss == 2.0);
  CHECK(e.grad == ParamVector{2, 0});

  auto q2 = quadratic_objective({1, 1}, {1, 1});
  e = q2->evaluate({1, 1}, all);
  CHECK(e.loss == -1.0);
  CHECK(e.grad == ParamVector{0, 0});

  auto q3 = quadratic_objective({2, 8}, {0, 0});
  e = q3->evaluate({1, 1}, all);
  CHECK(e.loss == 5.0);
  CHECK(e.grad == ParamVector{2, 8});
}

TEST_CASE("quadratic objective rejects bad input") {
  CHECK_THROWS_AS(quadratic_objective({1, 0}, {0, 0}), DomainError);
  CHECK_THROWS_AS(quadratic_objective({1, -2}, {0, 0}), DomainError);
  CHECK_THROWS_AS(quadratic_objective({1, 1}, {0}), DimensionError);
  auto q = quadratic_objective({1, 1}, {0, 0});
  CHECK_THROWS_AS(q->evaluate({1, 2, 3}, BatchRef::full()), DimensionError);
}

TEST_CASE("rosenbrock values") {
  auto r = rosenbrock_objective();
  auto e = r->evaluate({1, 1}, BatchRef::full());
  CHECK(e.loss == 0.0);
  CHECK(e.grad == ParamVector{0, 0});
  e = r->evaluate({0, 0}, BatchRef::full());
  CHECK(e.loss == 1.0);
  CHECK(e.grad == ParamVector{-2, 0});
  e = r->evaluate({-1.2, 1}, BatchRef::full());
  CHECK(e.loss == doctest::Approx(24.2).epsilon(1e-14));
  CHECK(max_rel_err(e.grad, finite_diff_grad(*r, {-1.2, 1}, 1e-6)) < 1e-6);
}

TEST_CASE("finite differences") {
  auto q = quadratic_objective({1, 1}, {0, 0});
  const auto fd = finite_diff_grad(*q, {2, 0}, 1e-5);
  CHECK(std::abs(fd[0] - 2.0) < 1e-8);
  CHECK(std::abs(fd[1]) < 1e-8);

  auto r = rosenbrock_objective();
  CHECK(max_rel_err(finite_diff_grad(*r, {-1.2, 1}, 1e-6), r->evaluate({-1.2, 1}, BatchRef::full()).grad) < 1e-5);

  CHECK(norm(finite_diff_grad(*r, {1, 1}, 1e-6), Norm::Linf) < 1e-7);
  auto q2 = quadratic_objective({2, 3}, {4, 9});
  CHECK(norm(finite_diff_grad(*q2, {2, 3}, 1e-6), Norm::Linf) < 1e-7);

  CHECK_THROWS_AS(finite_diff_grad(*q, {1, 1}, 0.0), DomainError);
  CHECK_THROWS_AS(finite_diff_grad(*q, {1, 1}, -1e-3), DomainError);
}

TEST_CASE("analytic gradients agree with finite differences at random points") {
  std::mt19937_64 rng(5);
  auto r = rosenbrock_objective();
  auto q = quadratic_objective({1, 2, 3, 4}, {1, -1, 0.5, 2});
  for (int i = 0; i < 100; ++i) {
    const auto x = fixtures::random_theta(rng, 2, 1.0);
    CHECK(max_rel_err(r->evaluate(x, BatchRef::full()).grad, finite_diff_grad(*r, x, 1e-6)) < 1e-5);
    const auto y = fixtures::random_theta(rng, 4, 1.0);
    CHECK(max_rel_err(q->evaluate(y, BatchRef::full()).grad, finite_diff_grad(*q, y, 1e-6)) < 1e-5);
  }

  const auto data = fixtures::random_classification(rng, 12, 3, 3);
  const auto net = std::make_shared<const Mlp>(MlpSpec::parse("3-5-3", Activation::tanh, Activation::softmax_xent));
  const NetworkObjective obj(net, data);
  for (int i = 0; i < 100; ++i) {
    const auto x = fixtures::random_theta(rng, obj.dim(), 0.7);
    CHECK(max_rel_err(obj.evaluate(x, BatchRef::full()).grad, finite_diff_grad(obj, x, 1e-6)) < 1e-5);
  }
}

TEST_CASE("network loss is additive over a batch partition") {
  std::mt19937_64 rng(17);
  const auto data = fixtures::random_classification(rng, 30, 4, 3);
  const auto net = std::make_shared<const Mlp>(MlpSpec::parse("4-6-3", Activation::tanh, Activation::softmax_xent));
  const NetworkObjective obj(net, data);
  const auto theta = net->init_parameters(2);

  const BatchSchedule sched{7, 99, BatchMode::shuffled};
  const auto parts = batches(data->size(), sched, 0);
  double weighted = 0.0;
  ParamVector grad(obj.dim());
  for (const auto& b : parts) {
    const auto e = obj.evaluate(theta, b);
    const double w = static_cast<double>(b.count(data->size())) / static_cast<double>(data->size());
    weighted += w * e.loss;
    grad += w * e.grad;
  }
  const auto full = obj.evaluate(theta, BatchRef::full());
  CHECK(std::abs(full.loss - weighted) < 1e-12);
  CHECK(norm(full.grad - grad, Norm::Linf) < 1e-12);
}

TEST_CASE("evaluation is deterministic") {
  auto r = rosenbrock_objective();
  const ParamVector x{0.3, -0.7};
  const auto a = r->evaluate(x, BatchRef::full());
  const auto b = r->evaluate(x, BatchRef::full());
  CHECK(a.loss == b.loss);
  CHECK(a.grad == b.grad);
}

TEST_CASE("batch references") {
  CHECK(BatchRef::full().is_full());
  CHECK_THROWS_AS(BatchRef::of({}), DomainError);
  const auto b = BatchRef::of({0, 4});
  CHECK(b.count(10) == 2);
  CHECK_NOTHROW(b.validate(5));
  CHECK_THROWS_AS(b.validate(4), RangeError);
}
