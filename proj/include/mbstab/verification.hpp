#ifndef MBSTAB_VERIFICATION_HPP
#define MBSTAB_VERIFICATION_HPP

#include <chrono>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mbstab/criteria.hpp"
#include "mbstab/growth.hpp"
#include "mbstab/report.hpp"
#include "mbstab/timedomain.hpp"
#include "mbstab/variational.hpp"

namespace mbstab {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

namespace detail {

template <typename Fn>
CheckResult timed_check(const std::string& name, Fn&& fn) {
  CheckResult r;
  r.name = name;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    std::ostringstream detail;
    r.pass = fn(detail);
    r.detail = detail.str();
  } catch (const std::exception& e) {
    r.pass = false;
    r.detail = std::string("exception: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

inline bool close_rel(double x, double ref, double rel) {
  return std::abs(x - ref) <= rel * std::abs(ref);
}

}  // namespace detail

/// The nine self-verification criteria. Each yields one pass/fail record with
/// the measured values in the detail string; an optional observer sees each
/// record as soon as it completes.
inline std::vector<CheckResult> run_acceptance(
    const std::function<void(const CheckResult&)>& observer = {}) {
  std::vector<CheckResult> raw;
  struct Observed {
    std::vector<CheckResult>& v;
    const std::function<void(const CheckResult&)>& obs;
    void push_back(CheckResult r) {
      if (obs) obs(r);
      v.push_back(std::move(r));
    }
  } out{raw, observer};
  auto cache = std::make_shared<FormsCache>();

  // 1. stress-free critical convection threshold: R0^2 = 27 pi^4 / 4,
  //    a_c = pi/sqrt(2), continuous search at N = 128
  out.push_back(detail::timed_check("C1 stress-free critical threshold", [&](std::ostringstream& d) {
    Params p;
    p.bc = BoundaryKind::StressFree;
    VariationalSolver solver(p, 128, cache);
    auto r = solver.critical_R0(ContinuousSearch{});
    const double ra = r.value * r.value;
    const double ra_ref = 27.0 * std::pow(M_PI, 4) / 4.0;
    const double ac_ref = M_PI / std::sqrt(2.0);
    d << "R0^2=" << ra << " (ref " << ra_ref << "), a_c=" << r.a_star << " (ref "
      << ac_ref << ")";
    return detail::close_rel(ra, ra_ref, 0.0015) && detail::close_rel(r.a_star, ac_ref, 0.01);
  }));

  // 2. rigid critical threshold at N = 128 with a Richardson-extrapolated
  //    oracle over N in {64, 128, 256}
  out.push_back(detail::timed_check("C2 rigid critical threshold", [&](std::ostringstream& d) {
    Params p;  // rigid by default
    auto at = [&](int N, const ContinuousSearch& cs) {
      VariationalSolver solver(p, N, cache);
      return solver.critical_R0(cs);
    };
    const ContinuousSearch narrow{2.6, 3.7, 12, 1e-7};
    const auto r128 = at(128, ContinuousSearch{});
    const double v64 = std::pow(at(64, narrow).value, 2);
    const double v128 = r128.value * r128.value;
    const double v256 = std::pow(at(256, narrow).value, 2);
    const double d1 = v128 - v64, d2 = v256 - v128;
    const double extrap = std::abs(d2 - d1) > 0.0 ? v256 - d2 * d2 / (d2 - d1) : v256;
    d << "R0^2(128)=" << v128 << ", extrapolated=" << extrap << " (ref 1707.76), a_c="
      << r128.a_star << " (ref 3.117)";
    return std::abs(v128 - 1707.76) <= 2.0 && std::abs(extrap - 1707.76) <= 2.0 &&
           detail::close_rel(r128.a_star, 3.117, 0.01);
  }));

  // 3 & 4. fixed-point consistency and growth-rate bracketing bounds on ten
  //        parameter sets above the convection threshold
  struct SetSpec {
    double Ra, P;
    bool zero_Q;
  };
  const std::vector<SetSpec> sets = {
      {2000, 1.0, true},  {2500, 1.0, true},  {3000, 1.0, true},  {2500, 4.0, false},
      {3500, 4.0, false}, {3000, 0.5, false}, {4000, 1.0, false}, {2200, 2.0, false},
      {2800, 1.5, false}, {3600, 0.7, false}};
  std::vector<GrowthResult> growth_runs;
  std::vector<Params> growth_params;
  std::vector<double> growth_R0;

  out.push_back(detail::timed_check("C3 fixed-point consistency", [&](std::ostringstream& d) {
    const int N = 40;
    const SearchSpec search = LatticeSearch{build_lattice(Params{}, 6.0)};
    double worst_res = 0.0, worst_q0 = 0.0;
    for (const auto& s : sets) {
      Params p;
      p.R = std::sqrt(s.Ra);
      p.P_theta = s.P;
      VariationalSolver solver(p, N, cache);
      const double R0 = solver.critical_R0(search).value;
      if (!s.zero_Q) {
        const double l0 = solver.lambda0(search).value;
        const double rcal = std::max(0.0, p.R / std::sqrt(p.P_theta) - l0);
        p.Q = rcal > 0.0
                  ? std::min(0.9, std::pow(0.8 * l0 / (2.0 * std::sqrt(rcal)), 2))
                  : 0.9;
      }
      VariationalSolver qsolver(p, N, cache);
      GrowthResult g = fixed_point_lambda(qsolver, search, 1e-12);
      worst_res = std::max(worst_res, g.fixed_point_residual / g.lambda);
      if (p.Q == 0.0)
        worst_q0 = std::max(worst_q0, std::abs(g.lambda - g.lambda0) / g.lambda0);
      growth_runs.push_back(g);
      growth_params.push_back(p);
      growth_R0.push_back(R0);
    }
    d << "max |alpha(L*)-L*|/L* = " << worst_res << " (<=1e-9), max Q=0 |L*-L0|/L0 = "
      << worst_q0 << " (<=1e-10)";
    return worst_res <= 1e-9 && worst_q0 <= 1e-10;
  }));

  out.push_back(detail::timed_check("C4 growth-rate bracketing bounds", [&](std::ostringstream& d) {
    if (growth_runs.size() != sets.size()) {
      d << "prerequisite C3 runs missing";
      return false;
    }
    bool ok = true;
    double worst_margin = kInf;
    for (size_t i = 0; i < growth_runs.size(); ++i) {
      const auto& g = growth_runs[i];
      const auto [lo, hi] = lambda_star_bounds(growth_params[i], g.lambda0, growth_R0[i]);
      const double eps = 1e-6 * g.lambda0;
      ok = ok && g.lambda >= lo - eps && g.lambda <= hi + eps;
      worst_margin = std::min({worst_margin, g.lambda - lo, hi - g.lambda});
    }
    d << "all 10 rates inside [L0-sqrt(QRc), (1-sqrt(Q))L0+R sqrt(Q/P)]; worst margin = "
      << worst_margin;
    return ok;
  }));

  // 5. monotonicity of the variational objects and of the classification
  //    frontier
  out.push_back(detail::timed_check("C5 monotonicity suites", [&](std::ostringstream& d) {
    const int N = 32;
    const SearchSpec search = LatticeSearch{build_lattice(Params{}, 6.0)};
    bool ok = true;

    Params p;
    p.R = std::sqrt(2500.0);
    p.Q = 0.5;
    {
      // alpha strictly increasing in s for Q > 0, constant for Q = 0
      VariationalSolver solver(p, N, cache);
      Params p0 = p;
      p0.Q = 0.0;
      VariationalSolver solver0(p0, N, cache);
      double prev = -kInf, prev0 = -kInf;
      for (int i = 0; i < 20; ++i) {
        const double s = 0.05 * std::pow(100.0, i / 19.0);
        const double v = solver.alpha(s, search).value;
        const double v0 = solver0.alpha(s, search).value;
        if (!(v > prev)) ok = false;
        if (!(v0 >= prev0)) ok = false;
        prev = v;
        prev0 = v0;
      }
      if (!ok) d << "[alpha vs s failed] ";
    }
    {
      // alpha nonincreasing in Q at fixed s
      double prev = kInf;
      for (int i = 0; i < 20; ++i) {
        Params pq = p;
        pq.Q = 10.0 * i / 19.0;
        VariationalSolver solver(pq, N, cache);
        const double v = solver.alpha(1.0, search).value;
        if (!(v <= prev + 1e-10 * std::max(1.0, std::abs(prev)))) {
          ok = false;
          d << "[alpha vs Q failed at Q=" << pq.Q << "] ";
        }
        prev = v;
      }
    }
    {
      // alpha nonincreasing in tau
      double prev = kInf;
      for (int i = 0; i < 20; ++i) {
        Params pt = p;
        pt.Q = 0.3;
        pt.tau = 0.05 + 0.95 * i / 19.0;
        VariationalSolver solver(pt, N, cache);
        const double v = solver.alpha(1.0, search).value;
        if (!(v <= prev + 1e-10 * std::max(1.0, std::abs(prev)))) {
          ok = false;
          d << "[alpha vs tau failed at tau=" << pt.tau << "] ";
        }
        prev = v;
      }
    }
    {
      // Lambda0 strictly increasing in R
      double prev = -kInf;
      for (int i = 0; i < 20; ++i) {
        Params pr;
        pr.R = std::sqrt(500.0 + 3500.0 * i / 19.0);
        VariationalSolver solver(pr, N, cache);
        const double v = solver.lambda0(search).value;
        if (!(v > prev)) {
          ok = false;
          d << "[Lambda0 vs R failed at R^2=" << pr.R * pr.R << "] ";
        }
        prev = v;
      }
    }
    {
      // Lambda* nonincreasing in Q over the admissible Q range
      Params pb;
      pb.R = std::sqrt(2500.0);
      VariationalSolver base(pb, N, cache);
      const double l0 = base.lambda0(search).value;
      const double rcal = std::max(0.0, pb.R - l0);
      const double q_hi =
          rcal > 0.0 ? std::min(0.9, std::pow(0.8 * l0 / (2.0 * std::sqrt(rcal)), 2)) : 0.9;
      double prev = kInf;
      for (int i = 0; i < 20; ++i) {
        Params pq = pb;
        pq.Q = q_hi * i / 19.0;
        VariationalSolver solver(pq, N, cache);
        const double v = fixed_point_lambda(solver, search, 1e-11).lambda;
        if (!(v <= prev + 1e-8 * std::max(1.0, std::abs(prev)))) {
          ok = false;
          d << "[Lambda* vs Q failed at Q=" << pq.Q << "] ";
        }
        prev = v;
      }
    }
    {
      // classification frontier monotone along a 50-point Q grid
      auto rank = [](Verdict v) {
        return v == Verdict::ProvablyUnstable ? 0 : (v == Verdict::Indeterminate ? 1 : 2);
      };
      int prev = -1;
      for (int i = 0; i < 50; ++i) {
        Params pq;
        pq.R = std::sqrt(2500.0);
        pq.Q = i == 0 ? 0.0 : std::pow(10.0, -4.0 + 9.0 * (i - 1) / 48.0);
        const Classification c = classify(pq, N, 6.0, cache);
        const int r = rank(c.verdict);
        if (r < prev) {
          ok = false;
          d << "[frontier inversion at Q=" << pq.Q << "] ";
        }
        prev = std::max(prev, r);
      }
    }
    if (ok) d << "alpha(s,Q,tau), Lambda0(R), Lambda*(Q), frontier(Q): all monotone";
    return ok;
  }));

  // 6. time-domain oracle against the per-mode variational rate
  out.push_back(detail::timed_check("C6 time-domain oracle", [&](std::ostringstream& d) {
    Params p;
    p.R = std::sqrt(2500.0);
    const double a = 3.117;
    const int N = 32;
    VariationalSolver solver(p, N, cache);
    const double lam = solver.lambda0_mode(a).value;
    const double dt = 1e-3 / lam;
    auto run = [&](double step) { return simulate_and_fit(p, a, N, step, 1.0 / lam, std::nullopt, cache); };
    const auto sim = run(dt);
    const auto sim_half = run(0.5 * dt);
    const double rel = std::abs(sim.fitted_rate - lam) / lam;
    const double r1 = sim.trace.identity_residual;
    const double r2 = sim_half.trace.identity_residual;
    const double ratio = r1 / r2;
    d << "fitted=" << sim.fitted_rate << " vs eigen=" << lam << " (rel " << rel
      << "), residual=" << r1 << ", halving ratio=" << ratio;
    return rel <= 0.01 && r1 <= 1e-4 && ratio >= 3.0 && ratio <= 5.0;
  }));

  // 7. stability-functional consistency and the coupling-scalar inequalities
  out.push_back(detail::timed_check("C7 criterion consistency", [&](std::ostringstream& d) {
    const int N = 32;
    const auto lattice = build_lattice(Params{}, 6.0);
    bool ok = true;

    // Q just above the analytic threshold forces both functionals below one
    for (double Ra : {1000.0, 2500.0}) {
      for (double P : {1.0, 4.0}) {
        Params p;
        p.R = std::sqrt(Ra);
        p.P_theta = P;
        p.Q = 1.01 * stability_threshold_Q(p);
        VariationalSolver solver(p, N, cache);
        const auto u1 = upsilon1(solver, lattice);
        const auto u2 = upsilon2(solver, lattice);
        if (!(u1.value < 1.0 && u2.value < 1.0)) {
          ok = false;
          d << "[threshold=>Upsilon<1 failed at Ra=" << Ra << ",P=" << P << "] ";
        }
      }
    }

    // analytic envelope of the first functional
    for (double Ra : {1000.0, 2500.0, 4000.0}) {
      for (double Q : {0.1, 10.0, 1e3, 1e5}) {
        for (double P : {1.0, 4.0}) {
          Params p;
          p.R = std::sqrt(Ra);
          p.P_theta = P;
          p.Q = Q;
          VariationalSolver solver(p, N, cache);
          const auto u1 = upsilon1(solver, lattice);
          if (!(u1.value <= u1.bound * (1.0 + 1e-8))) {
            ok = false;
            d << "[Upsilon1 bound violated at Ra=" << Ra << ",Q=" << Q << ",P=" << P << "] ";
          }
        }
      }
    }

    // Q = 0 supremum of the first functional is sqrt(2)
    {
      Params p;
      p.R = std::sqrt(2500.0);
      VariationalSolver solver(p, 128, cache);
      const auto u1 = upsilon1(solver, build_lattice(p, 8.0));
      if (!detail::close_rel(u1.value, std::sqrt(2.0), 0.01)) {
        ok = false;
        d << "[Upsilon1(Q=0)=" << u1.value << " not sqrt(2)] ";
      }
    }

    // random draws: sufficient instability implies exact instability, and the
    // coupling-scalar inequalities hold
    {
      const SearchSpec search = LatticeSearch{lattice};
      std::mt19937 rng(20250825u);
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      const std::vector<double> Ps = {0.5, 1.0, 2.0, 4.0};
      std::map<double, double> xi_by_P, R0_by_P;
      for (int i = 0; i < 50; ++i) {
        Params p;
        p.P_theta = Ps[rng() % Ps.size()];
        if (!R0_by_P.count(p.P_theta)) {
          VariationalSolver s0(p, N, cache);
          R0_by_P[p.P_theta] = s0.critical_R0(search).value;
          xi_by_P[p.P_theta] = s0.xi(search);
        }
        const double R0 = R0_by_P[p.P_theta];
        const double xi = xi_by_P[p.P_theta];
        p.R = R0 * (1.05 + 0.95 * unif(rng));
        p.Q = unif(rng) < 0.2 ? 0.0 : std::pow(10.0, -3.0 + 4.0 * unif(rng));
        VariationalSolver solver(p, N, cache);
        const double l0 = solver.lambda0(search).value;
        const auto v = instability_criterion(p, l0, R0, xi);
        if (v.sufficient && !v.exact) {
          ok = false;
          d << "[sufficient without exact at R=" << p.R << ",Q=" << p.Q << ",P="
            << p.P_theta << "] ";
        }
        if (!(2.0 * (p.R - R0) * xi <= l0 + 1e-6)) {
          ok = false;
          d << "[2(R-R0)xi > Lambda0 at R=" << p.R << ",P=" << p.P_theta << "] ";
        }
        if (!(xi <= 1.0 / (2.0 * std::sqrt(p.P_theta)) + 1e-9)) {
          ok = false;
          d << "[xi bound violated at P=" << p.P_theta << "] ";
        }
      }
    }
    if (ok) d << "threshold=>Upsilon<1, Upsilon1<=bound, Upsilon1(Q=0)=sqrt(2), "
                 "sufficient=>exact on 50 draws, coupling-scalar bounds";
    return ok;
  }));

  // 8. resistive-regime threshold formula
  out.push_back(detail::timed_check("C8 resistive threshold formula", [&](std::ostringstream& d) {
    bool ok = true;
    for (double Rs : {100.0, 657.5}) {
      const double lo = galdi_resistive_threshold(Rs, 0.0, 0.5, 1.0);
      const double hi = galdi_resistive_threshold(Rs, 0.0, 2.0, 1.0);
      ok = ok && detail::close_rel(lo, Rs, 1e-13) && detail::close_rel(hi, Rs, 1e-13);
      const double b1 = galdi_resistive_threshold(Rs, 2.0 * Rs / (M_PI * M_PI), 1.0, 1.0);
      const double b2 = galdi_resistive_threshold(Rs, 8.0 * Rs / (M_PI * M_PI), 2.0, 1.0);
      ok = ok && detail::close_rel(b1, 2.0 * Rs, 1e-13) && detail::close_rel(b2, 2.0 * Rs, 1e-13);
      d << "Rs=" << Rs << ": Qs=0 -> " << lo << "," << hi << "; branches -> " << b1 << ","
        << b2 << "  ";
    }
    return ok;
  }));

  // 9. sweep determinism and region cross-checks at N = 96
  out.push_back(detail::timed_check("C9 sweep determinism", [&](std::ostringstream& d) {
    SweepSpec spec;
    for (int i = 0; i < 10; ++i)
      spec.R_values.push_back(std::sqrt(1000.0 + 3000.0 * i / 9.0));
    spec.Q_values = {0.0, 1.0, 10.0, 100.0, 1e3, 1e4, 3e4, 1e5, 3e5, 1e6};
    spec.N = 96;
    spec.a_max = 8.0;

    spec.workers = 1;
    const SweepReport rep1 = run_sweep(spec);
    spec.workers = 8;
    const SweepReport rep8 = run_sweep(spec);
    const std::string csv1 = to_csv(rep1), csv8 = to_csv(rep8);
    bool ok = csv1 == csv8;
    if (!ok) d << "[CSV differs between worker counts] ";

    for (const auto& row : rep1.rows) {
      const double Ra = row.R * row.R;
      if (!row.error.empty()) {
        ok = false;
        d << "[cell error at R^2=" << Ra << ",Q=" << row.Q << ": " << row.error << "] ";
      }
      if (row.Q > Ra * 25.0 / 8.0 && row.classification != "ProvablyStable") {
        ok = false;
        d << "[Q>threshold cell not stable at R^2=" << Ra << ",Q=" << row.Q << "] ";
      }
      if (Ra < 1707.76 && row.classification != "ProvablyStable") {
        ok = false;
        d << "[subcritical cell not stable at R^2=" << Ra << ",Q=" << row.Q << "] ";
      }
    }
    if (ok)
      d << "byte-identical CSV at workers 1 and 8; stable region covers Q>R^2*25/8 and "
           "R^2<1707.76";
    return ok;
  }));

  return raw;
}

}  // namespace mbstab

#endif
