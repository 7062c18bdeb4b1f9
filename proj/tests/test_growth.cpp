#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "mbstab/growth.hpp"

using namespace mbstab;

namespace {

Params supercritical(double Ra = 2500.0, double Q = 0.0) {
  Params p;
  p.R = std::sqrt(Ra);
  p.Q = Q;
  return p;
}

const SearchSpec kSearch = LatticeSearch{build_lattice(Params{}, 5.0)};

}  // namespace

TEST_CASE("bracketing bounds collapse to Lambda0 when Q = 0") {
  auto [lo, hi] = lambda_star_bounds(supercritical(), 3.7, 1.0);
  CHECK(lo == 3.7);
  CHECK(hi == 3.7);
}

TEST_CASE("bracketing bounds reproduce the worked closed-form case") {
  // Lambda0 = 1, R = 2, P = 4, Q = 1/4: both bounds equal 1
  Params p;
  p.R = 2.0;
  p.P_theta = 4.0;
  p.Q = 0.25;
  auto [lo, hi] = lambda_star_bounds(p, 1.0, 1.0);
  CHECK(lo == Catch::Approx(1.0).epsilon(1e-14));
  CHECK(hi == Catch::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("bracketing bounds reject invalid regimes") {
  Params p = supercritical(2500.0, 1.0);  // Q = 1 outside [0,1)
  CHECK_THROWS_AS(lambda_star_bounds(p, 1.0, 1.0), std::invalid_argument);
  p.Q = 0.5;
  CHECK_THROWS_AS(lambda_star_bounds(p, 1.0, 100.0), std::invalid_argument);  // R <= R0
  CHECK_THROWS_AS(lambda_star_bounds(p, -1.0, 1.0), std::invalid_argument);   // Lambda0 <= 0
}

TEST_CASE("fixed point returns Lambda0 identically when Q = 0") {
  VariationalSolver solver(supercritical(), 24);
  auto g = fixed_point_lambda(solver, kSearch);
  CHECK(g.precondition_ok);
  CHECK_FALSE(g.beyond_lemma);
  CHECK(g.lambda == g.lambda0);
  CHECK(g.fixed_point_residual == 0.0);
  CHECK(g.trace.size() == 2);
}

TEST_CASE("fixed-point iterates increase monotonically and converge") {
  VariationalSolver solver(supercritical(2500.0, 0.2), 24);
  auto g = fixed_point_lambda(solver, kSearch, 1e-11);
  REQUIRE(g.trace.size() >= 2);
  for (size_t i = 1; i < g.trace.size(); ++i) CHECK(g.trace[i][1] >= g.trace[i - 1][1]);
  CHECK(g.fixed_point_residual <= 1e-9 * g.lambda);
  CHECK(g.lambda < g.lambda0);  // magnetic tension slows the growth
  CHECK(g.lambda > 0.0);
}

TEST_CASE("growth rate increases as the viscosity factor tau decreases") {
  double prev = -1e300;
  for (double tau : {1.0, 0.5, 0.25}) {
    Params p = supercritical(2500.0, 0.2);
    p.tau = tau;
    VariationalSolver solver(p, 24);
    const double lam = fixed_point_lambda(solver, kSearch).lambda;
    CHECK(lam > prev);
    prev = lam;
  }
}

TEST_CASE("precondition failures are reported as such") {
  {
    // subcritical forcing: Lambda0 <= 0
    VariationalSolver solver(supercritical(1000.0), 24);
    CHECK_THROWS_AS(fixed_point_lambda(solver, kSearch), PreconditionFailed);
  }
  {
    // overwhelming magnetic tension: alpha(Lambda0/2) falls below Lambda0/2
    VariationalSolver solver(supercritical(2500.0, 1e6), 24);
    CHECK_THROWS_AS(fixed_point_lambda(solver, kSearch), PreconditionFailed);
  }
}
