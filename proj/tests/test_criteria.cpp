#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "mbstab/criteria.hpp"

using namespace mbstab;

TEST_CASE("analytic stability threshold evaluates the closed form") {
  Params p;
  p.R = 2.0;
  p.P_theta = 4.0;
  CHECK(stability_threshold_Q(p) == Catch::Approx(2.0).epsilon(1e-14));
  p.R = 10.0;
  p.P_theta = 1.0;
  CHECK(stability_threshold_Q(p) == Catch::Approx(312.5).epsilon(1e-14));
}

TEST_CASE("first stability functional respects its analytic envelope") {
  // bound = 2R / sqrt(2R^2 + Q pi^2 P); equals 1 at R=10, P=1, Q=200/pi^2
  Params p;
  p.R = 10.0;
  p.Q = 200.0 / (M_PI * M_PI);
  VariationalSolver solver(p, 24);
  auto lat = build_lattice(p, 5.0);
  auto u1 = upsilon1(solver, lat);
  CHECK(u1.bound == Catch::Approx(1.0).epsilon(1e-14));
  CHECK(u1.value <= u1.bound * (1.0 + 1e-8));
  CHECK(u1.per_mode_curve.size() > 0);
}

TEST_CASE("first stability functional approaches sqrt(2) without a field") {
  Params p;
  p.R = std::sqrt(2500.0);
  VariationalSolver solver(p, 64);
  auto u1 = upsilon1(solver, build_lattice(p, 6.0));
  CHECK(u1.value == Catch::Approx(std::sqrt(2.0)).epsilon(0.02));
  CHECK(u1.value <= std::sqrt(2.0) + 1e-8);
}

TEST_CASE("first functional below one exactly when the quadratic form is definite") {
  auto check_link = [](double Ra, double Q) {
    Params p;
    p.R = std::sqrt(Ra);
    p.Q = Q;
    VariationalSolver solver(p, 24);
    auto u1 = upsilon1(solver, build_lattice(p, 5.0));
    const double e1 = e1_min_eigenvalue(solver, u1.a_star);
    if (u1.value < 1.0)
      CHECK(e1 > 0.0);
    else
      CHECK(e1 <= 0.0);
  };
  check_link(2500.0, 0.0);     // Upsilon1 = sqrt(2) > 1
  check_link(2500.0, 1e5);     // large field: Upsilon1 < 1
}

TEST_CASE("second stability functional is flagged infinite without a field") {
  Params p;
  p.R = std::sqrt(2500.0);
  VariationalSolver solver(p, 24);
  auto u2 = upsilon2(solver, build_lattice(p, 5.0));
  CHECK(u2.infinite);
  CHECK(std::isinf(u2.value));
}

TEST_CASE("second stability functional is nonincreasing in the field strength") {
  double prev = kInf;
  for (double Q : {10.0, 100.0, 1000.0, 1e4}) {
    Params p;
    p.R = std::sqrt(2500.0);
    p.Q = Q;
    VariationalSolver solver(p, 24);
    auto u2 = upsilon2(solver, build_lattice(p, 5.0));
    CHECK(u2.value <= prev * (1.0 + 1e-10));
    CHECK(std::isfinite(u2.alt_value));
    prev = u2.value;
  }
}

TEST_CASE("resistive threshold formula: worked branch evaluations") {
  const double Rs = 657.5;
  CHECK(galdi_resistive_threshold(Rs, 0.0, 0.5, 1.0) == Catch::Approx(Rs).epsilon(1e-14));
  CHECK(galdi_resistive_threshold(Rs, 0.0, 2.0, 1.0) == Catch::Approx(Rs).epsilon(1e-14));
  CHECK(galdi_resistive_threshold(Rs, 2.0 * Rs / (M_PI * M_PI), 1.0, 1.0) ==
        Catch::Approx(2.0 * Rs).epsilon(1e-13));
  CHECK(galdi_resistive_threshold(Rs, 8.0 * Rs / (M_PI * M_PI), 2.0, 1.0) ==
        Catch::Approx(2.0 * Rs).epsilon(1e-13));
  CHECK_THROWS_AS(galdi_resistive_threshold(-1.0, 0.0, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("instability criterion handles the degenerate and subcritical cases") {
  Params p;
  p.R = 2.0;
  p.P_theta = 4.0;
  {
    // subcritical: no instability claims
    auto v = instability_criterion(p, -1.0, 3.0, 0.2);
    CHECK_FALSE(v.exact);
    CHECK_FALSE(v.sufficient);
  }
  {
    // Rcal = R/sqrt(P) - Lambda0 = 0 drops the middle ratio
    auto v = instability_criterion(p, 1.0, 1.0, 0.25);
    CHECK(v.exact);
    CHECK(v.sufficient);
    CHECK(v.margin_exact > 0.0);
    CHECK(v.margin_sufficient > 0.0);
    CHECK(v.margin_sufficient <= v.margin_exact + 1e-14);
  }
}

TEST_CASE("classification covers the three verdicts") {
  const int N = 32;
  const double a_max = 6.0;
  auto cache = std::make_shared<FormsCache>();
  {
    Params p;
    p.R = std::sqrt(1000.0);  // below the rigid critical threshold
    auto c = classify(p, N, a_max, cache);
    CHECK(c.verdict == Verdict::ProvablyStable);
    CHECK(p.R < c.R0);
    CHECK(c.lambda0 < 0.0);
  }
  {
    Params p;
    p.R = std::sqrt(2500.0);
    auto c = classify(p, N, a_max, cache);
    CHECK(c.verdict == Verdict::ProvablyUnstable);
    REQUIRE(c.lambda_star.has_value());
    CHECK(*c.lambda_star == Catch::Approx(c.lambda0));  // Q = 0
    CHECK(c.instab.exact);
  }
  {
    Params p;
    p.R = std::sqrt(2500.0);
    p.Q = 100.0;  // too strong for instability, too weak for provable stability
    auto c = classify(p, N, a_max, cache);
    CHECK(c.verdict == Verdict::Indeterminate);
    CHECK_FALSE(c.lambda_star.has_value());
  }
  {
    Params p;
    p.R = std::sqrt(2500.0);
    p.Q = 1.01 * stability_threshold_Q(p);
    auto c = classify(p, N, a_max, cache);
    CHECK(c.verdict == Verdict::ProvablyStable);
  }
}
