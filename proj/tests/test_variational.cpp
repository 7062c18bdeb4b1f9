#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <set>

#include "mbstab/variational.hpp"

using namespace mbstab;

namespace {
const double kPi2 = M_PI * M_PI;
}

TEST_CASE("per-mode critical quotient matches the classical marginal curve") {
  // stress-free walls admit the exact profile sin(pi z):
  // R0(a)^2 = (pi^2 + a^2)^3 / a^2
  Params p;
  p.bc = BoundaryKind::StressFree;
  VariationalSolver solver(p, 64);
  for (double a : {1.0, 2.0, 3.0}) {
    const double mu = solver.r0_mode(a).value;
    const double ref = a / std::pow(kPi2 + a * a, 1.5);
    CHECK(mu == Catch::Approx(ref).epsilon(1e-6));
  }
}

TEST_CASE("continuous search locates the stress-free critical point") {
  Params p;
  p.bc = BoundaryKind::StressFree;
  VariationalSolver solver(p, 32);
  auto r = solver.critical_R0(ContinuousSearch{});
  CHECK(r.value * r.value == Catch::Approx(657.511).epsilon(0.01));
  CHECK(r.a_star == Catch::Approx(M_PI / std::sqrt(2.0)).epsilon(0.01));
}

TEST_CASE("lambda0 at vanishing forcing is the slowest diffusive decay") {
  // R -> 0: Lambda0 = -inf_a (pi^2 + a^2) over the available lattice (P = 1)
  Params p;
  p.R = 1e-8;
  p.bc = BoundaryKind::StressFree;
  p.L1 = p.L2 = 4.0;  // small lattice spacing, a_min = 1/4
  VariationalSolver solver(p, 32);
  auto r = solver.lambda0(LatticeSearch{build_lattice(p, 2.0)});
  CHECK(r.value == Catch::Approx(-(kPi2 + 1.0 / 16.0)).epsilon(0.001));
  CHECK(r.a_star == Catch::Approx(0.25));
}

TEST_CASE("growth curve is independent of s when Q = 0") {
  Params p;
  p.R = std::sqrt(2500.0);
  VariationalSolver solver(p, 24);
  const SearchSpec search = LatticeSearch{build_lattice(p, 5.0)};
  const double v1 = solver.alpha(0.1, search).value;
  const double v2 = solver.alpha(1.0, search).value;
  const double v3 = solver.alpha(10.0, search).value;
  CHECK(v1 == v2);
  CHECK(v2 == v3);
  CHECK(v1 == solver.lambda0(search).value);
}

TEST_CASE("growth curve depends on Q and s only through Q/s") {
  Params p1;
  p1.R = std::sqrt(3000.0);
  p1.Q = 0.4;
  Params p2 = p1;
  p2.Q = 0.8;
  VariationalSolver s1(p1, 24), s2(p2, 24);
  const SearchSpec search = LatticeSearch{build_lattice(p1, 5.0)};
  CHECK(s1.alpha(1.0, search).value == s2.alpha(2.0, search).value);
}

TEST_CASE("growth curve is bounded by R/sqrt(P) and nondecreasing in s") {
  Params p;
  p.R = std::sqrt(2500.0);
  p.Q = 0.5;
  p.P_theta = 2.0;
  VariationalSolver solver(p, 24);
  const SearchSpec search = LatticeSearch{build_lattice(p, 5.0)};
  double prev = -1e300;
  for (double s : {0.1, 0.5, 1.0, 2.0, 8.0}) {
    const double v = solver.alpha(s, search).value;
    CHECK(v <= p.R / std::sqrt(p.P_theta) + 1e-10);
    CHECK(v >= prev);
    prev = v;
  }
  CHECK_THROWS_AS(solver.alpha(0.0, search), std::invalid_argument);
}

TEST_CASE("coupling scalar matches the closed form at the stress-free critical point") {
  // critical profile W, Theta ~ sin(pi z) with amplitude ratio sqrt(g_theta/g_w);
  // at a_c = pi/sqrt(2) and P = 1 this gives xi = 1/(2 sqrt(3))
  Params p;
  p.bc = BoundaryKind::StressFree;
  VariationalSolver solver(p, 48);
  const double xi1 = solver.xi(ContinuousSearch{});
  CHECK(xi1 == Catch::Approx(1.0 / (2.0 * std::sqrt(3.0))).epsilon(1e-4));

  Params p4 = p;
  p4.P_theta = 4.0;
  VariationalSolver solver4(p4, 48);
  const double xi4 = solver4.xi(ContinuousSearch{});
  CHECK(xi4 == Catch::Approx(1.0 / (5.0 * std::sqrt(3.0))).epsilon(1e-4));
  // never exceeds 1/(2 sqrt(P))
  CHECK(xi1 <= 0.5 + 1e-9);
  CHECK(xi4 <= 0.25 + 1e-9);
}

TEST_CASE("a transverse-circulation block never carries the maximum") {
  // the quotient restricted to the field component with no vertical velocity
  // is a pure decay rate; appending it cannot change the growth value
  Params p;
  p.R = std::sqrt(2500.0);
  p.Q = 1.0;
  VariationalSolver solver(p, 24);
  const double s = 1.0;
  for (double a : {1.0, 3.0}) {
    auto f = solver.forms(a);
    const MatrixXd D3_T = f->G_Theta - a * a * f->M_Theta;  // int T'^2
    const MatrixXd A_tor = -p.tau * f->G_Theta - (p.Q / s) * D3_T;
    const double tor = max_generalized_eigenpair(A_tor, f->M_Theta).value;
    const double pol = solver.alpha_mode(a, s).value;
    CHECK(tor < 0.0);
    CHECK(tor < pol);
  }
}

TEST_CASE("lattice search deduplicates by magnitude and reports the winner") {
  Params p;
  p.R = std::sqrt(2500.0);
  VariationalSolver solver(p, 16);
  auto lat = build_lattice(p, 4.0);
  auto r = solver.lambda0(LatticeSearch{lat});
  // (1,0) and (0,1) share a = 1; the curve holds one entry per magnitude
  std::set<double> mags;
  for (const auto& k : lat) mags.insert(k.a);
  CHECK(r.per_mode_curve.size() == mags.size());
  REQUIRE(r.k_star.has_value());
  CHECK(std::hypot((*r.k_star)[0], (*r.k_star)[1]) == Catch::Approx(r.a_star));
  CHECK_THROWS_AS(solver.lambda0(LatticeSearch{}), std::invalid_argument);
}

TEST_CASE("shared cache returns identical form objects") {
  auto cache = std::make_shared<FormsCache>();
  Params p;
  VariationalSolver s1(p, 16, cache), s2(p, 16, cache);
  CHECK(s1.forms(2.0).get() == s2.forms(2.0).get());
  CHECK(s1.forms(2.0).get() != s1.forms(3.0).get());
}
