#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "mbstab/timedomain.hpp"

using namespace mbstab;

TEST_CASE("the zero state is a fixed point") {
  Params p;
  p.R = std::sqrt(2500.0);
  p.Q = 1.0;
  auto forms = std::make_shared<const ModeForms>(assemble_mode_forms(3.0, 16, p.bc));
  ModeIntegrator integ(forms, p, 1e-3);
  ModeState z = integ.initial_state(VectorXd::Zero(forms->dof_W), VectorXd::Zero(forms->dof_W),
                                    VectorXd::Zero(forms->dof_Theta));
  auto z1 = integ.step(z);
  CHECK(z1.u.norm() == 0.0);
  CHECK(z1.theta.norm() == 0.0);
  CHECK(integ.energy(z1).E == 0.0);
}

TEST_CASE("one step is linear in the initial state") {
  Params p;
  p.R = std::sqrt(2000.0);
  p.Q = 0.5;
  auto forms = std::make_shared<const ModeForms>(assemble_mode_forms(2.0, 12, p.bc));
  ModeIntegrator integ(forms, p, 1e-2);
  const int nw = forms->dof_W, nt = forms->dof_Theta;
  VectorXd ua = VectorXd::Random(nw), ub = VectorXd::Random(nw);
  VectorXd ea = VectorXd::Random(nw), eb = VectorXd::Random(nw);
  VectorXd ta = VectorXd::Random(nt), tb = VectorXd::Random(nt);
  auto sa = integ.step(integ.initial_state(ea, ua, ta));
  auto sb = integ.step(integ.initial_state(eb, ub, tb));
  auto sum = integ.step(integ.initial_state(ea + eb, ua + ub, ta + tb));
  CHECK((sum.u - sa.u - sb.u).norm() < 1e-12 * (sa.u.norm() + sb.u.norm()));
  CHECK((sum.theta - sa.theta - sb.theta).norm() < 1e-12 * (sa.theta.norm() + sb.theta.norm()));
  CHECK((sum.eta - sa.eta - sb.eta).norm() < 1e-12 * (sa.eta.norm() + sb.eta.norm()));
}

TEST_CASE("without forcing the energy never increases") {
  Params p;
  p.R = 1e-12;
  p.Q = 2.0;
  auto forms = std::make_shared<const ModeForms>(assemble_mode_forms(2.5, 12, p.bc));
  ModeIntegrator integ(forms, p, 5e-3);
  ModeState s = integ.initial_state(VectorXd::Random(forms->dof_W),
                                    VectorXd::Random(forms->dof_W),
                                    VectorXd::Random(forms->dof_Theta));
  double prev = integ.energy(s).E;
  for (int i = 0; i < 200; ++i) {
    s = integ.step(s);
    const double e = integ.energy(s).E;
    CHECK(e <= prev * (1.0 + 1e-12));
    prev = e;
  }
}

TEST_CASE("subcritical forcing produces a decaying fit that matches the eigen rate") {
  Params p;
  p.R = std::sqrt(1000.0);
  auto sim = simulate_and_fit(p, 3.117, 24, 1e-3, 1.0);
  CHECK(sim.predicted_rate < 0.0);
  CHECK(sim.fitted_rate == Catch::Approx(sim.predicted_rate).epsilon(0.01));
}

TEST_CASE("supercritical forcing with a field grows at the variational rate") {
  Params p;
  p.R = std::sqrt(2500.0);
  p.Q = 0.3;
  auto sim = simulate_and_fit(p, 3.117, 24, 1e-4, 0.1);
  CHECK(sim.predicted_rate > 0.0);
  CHECK(sim.fitted_rate == Catch::Approx(sim.predicted_rate).epsilon(0.01));
  CHECK(sim.trace.identity_residual < 1e-4);
  CHECK_FALSE(sim.fit_fallback);
}

TEST_CASE("energy-identity residual is second order on a synthetic trace") {
  // E = e^{2t}, D = 1, S = 1 + 2 e^{2t} satisfy dE/dt = S - D exactly
  auto make = [](double dt, int n) {
    std::vector<EnergySample> v;
    for (int i = 0; i <= n; ++i) {
      EnergySample s;
      s.t = i * dt;
      s.E = std::exp(2.0 * s.t);
      s.D = 1.0;
      s.S = 1.0 + 2.0 * std::exp(2.0 * s.t);
      v.push_back(s);
    }
    return v;
  };
  const double r1 = energy_identity_residual(make(1e-2, 100));
  const double r2 = energy_identity_residual(make(5e-3, 200));
  CHECK(r1 < 1e-3);
  const double ratio = r1 / r2;
  CHECK(ratio > 3.0);
  CHECK(ratio < 5.0);
}

TEST_CASE("degenerate traces are handled") {
  std::vector<EnergySample> flat;
  for (int i = 0; i < 5; ++i) flat.push_back({0.1 * i, 0.0, 0.0, 0.0});
  CHECK(energy_identity_residual(flat) == 0.0);
  flat.resize(2);
  CHECK_THROWS_AS(energy_identity_residual(flat), std::invalid_argument);
}

TEST_CASE("invalid integrator inputs are rejected") {
  Params p;
  auto forms = std::make_shared<const ModeForms>(assemble_mode_forms(2.0, 8, p.bc));
  CHECK_THROWS_AS(ModeIntegrator(forms, p, 0.0), std::invalid_argument);
  ModeIntegrator integ(forms, p, 1e-2);
  CHECK_THROWS_AS(integ.initial_state(VectorXd::Zero(1), VectorXd::Zero(1), VectorXd::Zero(1)),
                  std::invalid_argument);
  CHECK_THROWS_AS(simulate_and_fit(p, 2.0, 8, 1.0, 0.5), std::invalid_argument);
}
