#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "apts/trust_region.hpp"
#include "fixtures.hpp"

using namespace apts;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

TrParams with_norm(Norm n) {
  TrParams p;
  p.norm = n;
  return p;
}

// Quadratic with random positive diagonal curvature and random linear term.
QuadraticObjective random_quadratic(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> curv(0.5, 4.0);
  ParamVector a(n);
  for (auto& v : a) v = curv(rng);
  return QuadraticObjective(a, fixtures::random_theta(rng, n, 1.0));
}

}  // namespace

TEST_CASE("parameter validation") {
  TrParams p;
  CHECK_NOTHROW(p.validate());
  p.eta1 = 0.8;
  CHECK_THROWS_AS(p.validate(), DomainError);
  p = TrParams{};
  p.gamma_dec = 1.0;
  CHECK_THROWS_AS(p.validate(), DomainError);
  p = TrParams{};
  p.gamma_inc = 0.9;
  CHECK_THROWS_AS(p.validate(), DomainError);
  p = TrParams{};
  p.delta_min = 2.0;
  p.delta_max = 1.0;
  CHECK_THROWS_AS(p.validate(), DomainError);
}

TEST_CASE("subproblem with the identity proxy") {
  const auto h = HessianProxy::identity();
  const ParamVector g{2, 0};
  const TrModel m{g, h};
  CHECK(solve_subproblem(m, 1.0, Norm::L2) == ParamVector{-1, 0});
  CHECK(solve_subproblem(m, 5.0, Norm::L2) == ParamVector{-2, 0});
  const ParamVector zero{0, 0};
  CHECK(solve_subproblem(TrModel{zero, h}, 1.0, Norm::L2) == ParamVector{0, 0});
  CHECK(solve_subproblem(TrModel{zero, h}, 1.0, Norm::Linf) == ParamVector{0, 0});
  CHECK_THROWS_AS(solve_subproblem(m, 0.0, Norm::L2), DomainError);
  CHECK_THROWS_AS(solve_subproblem(m, -1.0, Norm::Linf), DomainError);
}

TEST_CASE("inf-norm subproblem beats a grid search") {
  const auto h = HessianProxy::identity();
  const ParamVector g{3, 4};
  const TrModel m{g, h};
  const auto s = solve_subproblem(m, 1.0, Norm::Linf);
  CHECK(norm(s, Norm::Linf) <= 1.0 + 1e-12);

  double best = kInf;
  for (int i = -1000; i <= 1000; ++i) {
    for (int j = -1000; j <= 1000; ++j) best = std::min(best, m.value({i * 1e-3, j * 1e-3}));
  }
  CHECK(m.value(s) <= best + 1e-12);
  const ParamVector scaled = (-1.0 / norm(g, Norm::Linf)) * g;
  CHECK(m.value(s) <= m.value(scaled));
}

TEST_CASE("L-BFGS proxy is symmetric and positive along stored pairs") {
  std::mt19937_64 rng(3);
  auto h = HessianProxy::lbfgs(5);
  const auto q = random_quadratic(rng, 8);
  for (int k = 0; k < 12; ++k) {
    const auto x = fixtures::random_theta(rng, 8);
    const auto s = fixtures::random_theta(rng, 8, 0.3);
    h.update(s, q.evaluate(x + s, BatchRef::full()).grad - q.evaluate(x, BatchRef::full()).grad);
  }
  CHECK(h.pairs() == 5);
  for (int k = 0; k < 50; ++k) {
    const auto u = fixtures::random_theta(rng, 8);
    const auto v = fixtures::random_theta(rng, 8);
    CHECK(std::abs(dot(h.apply(u), v) - dot(u, h.apply(v))) <= 1e-10 * (1 + norm(u, Norm::L2) * norm(v, Norm::L2)));
    CHECK(dot(u, h.apply(u)) > 0.0);
  }
  // Curvature condition: non-positive <s, y> pairs are skipped.
  CHECK_FALSE(h.update({1, 0, 0, 0, 0, 0, 0, 0}, {-1, 0, 0, 0, 0, 0, 0, 0}));
  h.reset();
  CHECK(h.pairs() == 0);
  CHECK(h.apply({1, 2}) == ParamVector{1, 2});
}

TEST_CASE("L-BFGS subproblem is feasible with at least Cauchy decrease") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(trial % 9);
    const auto q = random_quadratic(rng, n);
    auto h = HessianProxy::lbfgs();
    for (int k = 0; k < 6; ++k) {
      const auto x = fixtures::random_theta(rng, n);
      const auto s = fixtures::random_theta(rng, n, 0.5);
      h.update(s, q.evaluate(x + s, BatchRef::full()).grad - q.evaluate(x, BatchRef::full()).grad);
    }
    const auto g = fixtures::random_theta(rng, n, 2.0);
    const TrModel m{g, h};
    const double delta = std::uniform_real_distribution<double>(0.01, 3.0)(rng);
    for (Norm kind : {Norm::L2, Norm::Linf}) {
      const auto s = solve_subproblem(m, delta, kind);
      CHECK(norm(s, kind) <= delta * (1 + 1e-12));
      CHECK(m.value(s) <= m.value(cauchy_point(m, delta, kind)) + 1e-12);
    }
  }
}

TEST_CASE("agreement ratio") {
  CHECK(rho(2.0, 0.5, 1.5) == 1.0);
  CHECK(rho(1.0, 1.2, 0.5) == doctest::Approx(-0.4));
  CHECK(rho(1.0, 0.0, 0.0) == kRejectRho);
  CHECK(rho(1.0, 0.0, -1.0) == kRejectRho);
  CHECK(rho(0.0, -1e-17, 1e-20) == doctest::Approx(1e-17 / 1e-16));
}

TEST_CASE("acceptance rule and clamping") {
  TrParams p;
  p.delta_max = 3.0;
  double next = 0.0;
  CHECK(tr_decide(0.9, 1.0, p, next) == TrOutcome::accept_grow);
  CHECK(next == 2.0);
  CHECK(tr_decide(0.75, 1.0, p, next) == TrOutcome::accept_grow);
  CHECK(tr_decide(0.5, 1.0, p, next) == TrOutcome::accept_hold);
  CHECK(next == 1.0);
  CHECK(tr_decide(0.1, 1.0, p, next) == TrOutcome::reject_shrink);
  CHECK(next == 0.5);
  CHECK(tr_decide(kRejectRho, 1.0, p, next) == TrOutcome::reject_shrink);
  CHECK(tr_decide(0.9, 2.0, p, next) == TrOutcome::accept_grow);
  CHECK(next == 3.0);
  p.delta_min = 0.4;
  CHECK(tr_decide(-1.0, 0.5, p, next) == TrOutcome::reject_shrink);
  CHECK(next == 0.4);
}

TEST_CASE("one step on half the squared norm") {
  auto q = quadratic_objective({1, 1}, {0, 0});
  const auto st = make_tr_state(*q, {2, 0}, 1.0, BatchRef::full());
  const auto next = tr_step(*q, st, TrParams{}, BatchRef::full());
  CHECK(next.theta == ParamVector{1, 0});
  CHECK(next.delta == 2.0);
  CHECK(next.history.back().rho == 1.0);
  CHECK(next.history.back().accepted);
  CHECK(next.f_value == 0.5);
}

TEST_CASE("stationary point gives a zero, rejected step") {
  auto q = quadratic_objective({1, 1}, {1, 1});
  const auto st = make_tr_state(*q, {1, 1}, 1.0, BatchRef::full());
  const auto next = tr_step(*q, st, TrParams{}, BatchRef::full());
  CHECK(next.theta == st.theta);
  CHECK(next.history.back().step_norm == 0.0);
}

TEST_CASE("non-finite trial values") {
  int calls = 0;
  FunctionObjective blowup(2, [&](const ParamVector& t, const BatchRef&) {
    ++calls;
    if (calls > 1) return Evaluation{kInf, ParamVector{0, 0}};
    return Evaluation{0.5 * dot(t, t), t};
  });
  const auto st = make_tr_state(blowup, {2, 0}, 1.0, BatchRef::full());
  const auto next = tr_step(blowup, st, TrParams{}, BatchRef::full());
  CHECK(next.theta == st.theta);
  CHECK(next.delta == 0.5);
  CHECK_FALSE(next.history.back().accepted);

  int nan_calls = 0;
  FunctionObjective nan_obj(2, [&](const ParamVector& t, const BatchRef&) {
    ++nan_calls;
    if (nan_calls > 1) return Evaluation{std::nan(""), ParamVector{0, 0}};
    return Evaluation{0.5 * dot(t, t), t};
  });
  const auto st2 = make_tr_state(nan_obj, {2, 0}, 1.0, BatchRef::full());
  CHECK_THROWS_AS(tr_step(nan_obj, st2, TrParams{}, BatchRef::full()), NonFiniteError);
  CHECK(st2.theta == ParamVector{2, 0});

  FunctionObjective bad_start(1, [](const ParamVector&, const BatchRef&) { return Evaluation{kInf, ParamVector{0}}; });
  CHECK_THROWS_AS(make_tr_state(bad_start, {0}, 1.0, BatchRef::full()), NonFiniteError);
}

TEST_CASE("runs") {
  auto q = quadratic_objective({1, 1}, {0, 0});
  auto st = tr_run(*q, {2, 0}, 1.0, TrParams{}, 0);
  CHECK(st.theta == ParamVector{2, 0});
  CHECK(st.history.empty());

  st = tr_run(*q, {2, 0}, 1.0, TrParams{}, 30);
  CHECK(norm(st.grad, Norm::L2) < 1e-10);

  auto r = rosenbrock_objective();
  st = tr_run(*r, {-1.2, 1}, 1.0, TrParams{}, 5000);
  CHECK(st.f_value < 1e-4);

  st = tr_run(*r, {-1.2, 1}, 1.0, TrParams{}, 200, BatchRef::full(), HessianProxy::lbfgs());
  CHECK(st.f_value < 1e-10);
}

TEST_CASE("trajectory invariants") {
  std::mt19937_64 rng(12);
  auto r = rosenbrock_objective();
  for (int trial = 0; trial < 20; ++trial) {
    for (Norm kind : {Norm::L2, Norm::Linf}) {
      const auto x0 = fixtures::random_theta(rng, 2, 1.5);
      TrParams p = with_norm(kind);
      TrState st = make_tr_state(*r, x0, 0.5, BatchRef::full(),
                                 trial % 2 ? HessianProxy::lbfgs() : HessianProxy::identity());
      double last = st.f_value;
      for (int k = 0; k < 60; ++k) {
        const TrState next = tr_step(*r, st, p, BatchRef::full());
        const auto& rec = next.history.back();
        CHECK(rec.step_norm <= st.delta + 1e-12);
        CHECK(next.delta >= p.delta_min);
        CHECK(next.delta <= p.delta_max);
        if (rec.accepted) {
          CHECK(next.f_value <= last);
          last = next.f_value;
        } else {
          CHECK(next.theta == st.theta);
        }
        st = next;
      }
    }
  }
}

TEST_CASE("no-growth local runs stay inside the outer radius") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    for (Norm kind : {Norm::L2, Norm::Linf}) {
      const auto q = random_quadratic(rng, 6);
      const double big_delta = std::uniform_real_distribution<double>(0.01, 2.0)(rng);
      const std::size_t m = 1 + static_cast<std::size_t>(trial % 7);
      TrParams p = with_norm(kind);
      p.gamma_inc = 1.0;
      p.delta_max = big_delta / static_cast<double>(m);
      const auto x0 = fixtures::random_theta(rng, 6, 2.0);
      const auto st = tr_run(q, x0, big_delta / static_cast<double>(m), p, m);
      CHECK(norm(st.theta - x0, kind) <= big_delta + 1e-12);
    }
  }
}
