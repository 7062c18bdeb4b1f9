#ifndef MBSTAB_CRITERIA_HPP
#define MBSTAB_CRITERIA_HPP

#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "mbstab/growth.hpp"
#include "mbstab/variational.hpp"

namespace mbstab {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Analytic sufficient stability bound: both stability functionals drop below
/// one once Q > R^2 (1 + 4/P_theta)^2 / 8.
inline double stability_threshold_Q(const Params& p) {
  const double c = 1.0 + 4.0 / p.P_theta;
  return p.R * p.R * c * c / 8.0;
}

/// Resistive-regime stability threshold R_sigma must stay below:
///   Rs/2 + sqrt(Rs^2/4 + pi^2 Rs Qs)            for P_m <= P_theta
///   Rs/2 + sqrt(Rs^2/4 + pi^2 Rs Qs/(Pm/P)^2)   for P_m >  P_theta
inline double galdi_resistive_threshold(double R_s, double Q_sigma, double P_m,
                                        double P_theta) {
  if (!(R_s > 0.0 && P_m > 0.0 && P_theta > 0.0 && Q_sigma >= 0.0))
    throw std::invalid_argument("galdi_resistive_threshold: invalid inputs");
  double q = Q_sigma;
  if (P_m > P_theta) {
    const double r = P_m / P_theta;
    q /= r * r;
  }
  return 0.5 * R_s + std::sqrt(0.25 * R_s * R_s + M_PI * M_PI * R_s * q);
}

struct Upsilon1Result {
  double value = 0.0;
  double bound = 0.0;  // 2R / sqrt(2R^2 + Q pi^2 P_theta)
  double a_star = 0.0;
  bool tail_decreasing = true;
  std::vector<std::pair<double, double>> per_mode_curve;
};

/// First stability functional: per mode the largest eigenvalue of
///   (4R C_sym,  Q D3_W + (2R^2/P) W3  (+)  P M_Theta),
/// maximized over the lattice. Depends on the mode through a only.
inline Upsilon1Result upsilon1(const VariationalSolver& solver,
                               const std::vector<Wavenumber>& lattice) {
  if (lattice.empty()) throw std::invalid_argument("upsilon1: empty lattice");
  const Params& p = solver.params();
  Upsilon1Result out;
  out.bound = 2.0 * p.R /
              std::sqrt(2.0 * p.R * p.R + p.Q * M_PI * M_PI * p.P_theta);

  std::set<double> mags;
  for (const auto& k : lattice) mags.insert(k.a);
  bool first = true;
  for (double a : mags) {
    auto f = solver.forms(a);
    const MatrixXd A = detail::joint2(MatrixXd::Zero(f->dof_W, f->dof_W),
                                      MatrixXd(2.0 * p.R * f->C),
                                      MatrixXd::Zero(f->dof_Theta, f->dof_Theta));
    MatrixXd B = MatrixXd::Zero(A.rows(), A.cols());
    B.topLeftCorner(f->dof_W, f->dof_W) =
        p.Q * f->D3_W + (2.0 * p.R * p.R / p.P_theta) * f->W3;
    B.bottomRightCorner(f->dof_Theta, f->dof_Theta) = p.P_theta * f->M_Theta;
    const double v = max_generalized_eigenpair(A, B).value;
    out.per_mode_curve.emplace_back(a, v);
    if (first || v > out.value) {
      out.value = v;
      out.a_star = a;
      first = false;
    }
  }
  const size_t n = out.per_mode_curve.size();
  if (n >= 3)
    out.tail_decreasing = out.per_mode_curve[n - 1].second < out.per_mode_curve[n - 2].second &&
                          out.per_mode_curve[n - 2].second < out.per_mode_curve[n - 3].second;
  return out;
}

struct Upsilon2Result {
  double value = 0.0;      // sum-over-orders interpretation of underlined norms
  double alt_value = 0.0;  // top-order-only interpretation, for sensitivity
  bool infinite = false;   // Q = 0: the flow-map field is unconstrained
  bool tail_decreasing = true;
  std::vector<std::pair<double, double>> per_mode_curve;  // (a, max value at that a)
};

/// Second stability functional over three per-mode fields (flow map, velocity,
/// temperature) with directional weights mu_m(k) = sum_{o1+o2=m} k1^2o1 k2^2o2
/// and S_m = sum_{j<=m} mu_j. The joint ratio splits additively, so the value
/// is the max of the velocity part  (S3/2S2) lambda_max(M_W, G_W)  and the
/// flow-map/temperature coupling pencil.
inline Upsilon2Result upsilon2(const VariationalSolver& solver,
                               const std::vector<Wavenumber>& lattice) {
  if (lattice.empty()) throw std::invalid_argument("upsilon2: empty lattice");
  const Params& p = solver.params();
  Upsilon2Result out;
  if (!(p.Q > 0.0)) {
    out.infinite = true;
    out.value = out.alt_value = kInf;
    return out;
  }

  std::map<std::pair<double, double>, double> seen;  // (k1^2, k2^2) -> value
  std::map<double, double> by_a;
  auto& cache = const_cast<VariationalSolver&>(solver).cache();

  for (const auto& k : lattice) {
    const double x = k.k1 * k.k1, y = k.k2 * k.k2;
    auto key = std::minmax(x, y);
    if (seen.count({key.first, key.second})) continue;
    const double mu1 = x + y;
    const double mu2 = x * x + x * y + y * y;
    const double mu3 = x * x * x + x * x * y + x * y * y + y * y * y;
    const double S2 = 1.0 + mu1 + mu2;
    const double S3 = S2 + mu3;

    auto f = solver.forms(k.a);
    const double mw_gw = cache.mw_over_gw(*f, solver.resolution());
    const MatrixXd K = (4.0 * p.R / p.P_theta) * S2 * f->GC + p.R * S3 * f->C;

    auto coupling_part = [&](double d3_weight) {
      const MatrixXd A = detail::joint2(MatrixXd::Zero(f->dof_W, f->dof_W),
                                        MatrixXd(0.5 * K),
                                        MatrixXd::Zero(f->dof_Theta, f->dof_Theta));
      MatrixXd B = MatrixXd::Zero(A.rows(), A.cols());
      B.topLeftCorner(f->dof_W, f->dof_W) = p.Q * d3_weight * f->D3_W;
      B.bottomRightCorner(f->dof_Theta, f->dof_Theta) = 2.0 * S2 * f->G_Theta;
      return max_generalized_eigenpair(A, B).value;
    };

    const double v = std::max(S3 / (2.0 * S2) * mw_gw, coupling_part(S3));
    const double v_alt = mu3 > 0.0
                             ? std::max(mu3 / (2.0 * S2) * mw_gw, coupling_part(mu3))
                             : kInf;
    seen[{key.first, key.second}] = v;
    out.value = std::max(out.value, v);
    out.alt_value = std::max(out.alt_value, v_alt);
    auto it = by_a.find(k.a);
    if (it == by_a.end())
      by_a.emplace(k.a, v);
    else
      it->second = std::max(it->second, v);
  }
  out.per_mode_curve.assign(by_a.begin(), by_a.end());
  const size_t n = out.per_mode_curve.size();
  if (n >= 3)
    out.tail_decreasing = out.per_mode_curve[n - 1].second < out.per_mode_curve[n - 2].second &&
                          out.per_mode_curve[n - 2].second < out.per_mode_curve[n - 3].second;
  return out;
}

/// Smallest eigenvalue of the per-mode quadratic form
///   E1 = Q d3(phi) + (2R^2/P) |phi_3|^2 + P |psi|^2 - 4R int(phi_3 psi)
/// against the joint mass; positive iff the form is positive definite.
inline double e1_min_eigenvalue(const VariationalSolver& solver, double a) {
  const Params& p = solver.params();
  auto f = solver.forms(a);
  const MatrixXd E1 = detail::joint2(
      MatrixXd(p.Q * f->D3_W + (2.0 * p.R * p.R / p.P_theta) * f->W3),
      MatrixXd(-2.0 * p.R * f->C), MatrixXd(p.P_theta * f->M_Theta));
  MatrixXd B = MatrixXd::Zero(E1.rows(), E1.cols());
  B.topLeftCorner(f->dof_W, f->dof_W) = f->W3;
  B.bottomRightCorner(f->dof_Theta, f->dof_Theta) = f->M_Theta;
  return -max_generalized_eigenpair(MatrixXd(-E1), B).value;
}

struct InstabilityVerdict {
  bool exact = false;       // sqrt(Q) <= min{1, L0/(Rc+2 sqrt(Rc)), L0/(1+sqrt(Rc))}
  bool sufficient = false;  // same with 2(R-R0) xi and Hc in place of L0 and Rc
  double margin_exact = kNaN;
  double margin_sufficient = kNaN;
  std::string reason;
};

inline InstabilityVerdict instability_criterion(const Params& p, double lambda0,
                                                double R0, double xi) {
  InstabilityVerdict v;
  if (!(p.R > R0)) {
    v.reason = "convection condition fails";
    return v;
  }
  const double sq = std::sqrt(p.Q);
  auto bound = [](double num, double aux) {
    // min{1, num/(aux + 2 sqrt(aux)), num/(1 + sqrt(aux))}; degenerate aux = 0
    // drops the middle constraint
    const double saux = std::sqrt(std::max(0.0, aux));
    double m = 1.0;
    if (aux > 0.0) m = std::min(m, num / (aux + 2.0 * saux));
    m = std::min(m, num / (1.0 + saux));
    return m;
  };
  const double rcal = std::max(0.0, p.R / std::sqrt(p.P_theta) - lambda0);
  const double me = bound(lambda0, rcal);
  v.exact = sq <= me;
  v.margin_exact = me - sq;

  const double coupling = 2.0 * (p.R - R0) * xi;
  const double hcal = std::max(0.0, p.R / std::sqrt(p.P_theta) - coupling);
  const double ms = bound(coupling, hcal);
  v.sufficient = sq <= ms;
  v.margin_sufficient = ms - sq;
  return v;
}

enum class Verdict { ProvablyStable, ProvablyUnstable, Indeterminate };

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::ProvablyStable: return "ProvablyStable";
    case Verdict::ProvablyUnstable: return "ProvablyUnstable";
    default: return "Indeterminate";
  }
}

/// Precomputed lattice-critical data; independent of (R, Q, tau) so sweeps
/// evaluate it once per (bc, N, a_max, P_theta).
struct CriticalData {
  double R0 = 0.0;
  double a_c = 0.0;
  double xi = 0.0;
};

struct Classification {
  Verdict verdict = Verdict::Indeterminate;
  std::string witness;
  double R0 = kNaN;
  double lambda0 = kNaN;
  double xi = kNaN;
  double upsilon1 = kNaN;
  double upsilon1_bound = kNaN;
  double upsilon2 = kNaN;
  double upsilon2_alt = kNaN;
  bool upsilon2_infinite = false;
  double Q_stab_threshold = kNaN;
  InstabilityVerdict instab;
  std::optional<double> lambda_star;
  double a_max_used = 0.0;
};

inline CriticalData compute_critical_data(const Params& params, int N, double a_max,
                                          std::shared_ptr<FormsCache> cache) {
  VariationalSolver solver(params, N, std::move(cache));
  const SearchSpec search = LatticeSearch{build_lattice(params, a_max)};
  auto r0 = solver.critical_R0(search);
  CriticalData cd;
  cd.R0 = r0.value;
  cd.a_c = r0.a_star;
  cd.xi = solver.xi(search);
  return cd;
}

/// Classifies one parameter point (tau = 1) on the lattice of its periodic
/// domain. Sufficient stability routes are tried cheapest first; the exact
/// instability test applies only above the convection threshold.
inline Classification classify(const Params& params, int N, double a_max,
                               std::shared_ptr<FormsCache> cache = nullptr,
                               const std::optional<CriticalData>& critical = std::nullopt) {
  if (!cache) cache = std::make_shared<FormsCache>();
  Classification c;
  c.a_max_used = a_max;
  c.Q_stab_threshold = stability_threshold_Q(params);

  const CriticalData cd =
      critical ? *critical : compute_critical_data(params, N, a_max, cache);
  c.R0 = cd.R0;
  c.xi = cd.xi;

  VariationalSolver solver(params, N, cache);
  auto lattice = build_lattice(params, a_max);
  const SearchSpec search = LatticeSearch{lattice};
  c.lambda0 = solver.lambda0(search).value;

  if (params.R < cd.R0) {
    c.verdict = Verdict::ProvablyStable;
    c.witness = "R < R0";
    return c;
  }
  if (params.Q > c.Q_stab_threshold) {
    c.verdict = Verdict::ProvablyStable;
    c.witness = "Q > R^2(1+4/P)^2/8";
    return c;
  }

  // exact instability excludes both stability routes, so settle it before
  // paying for the stability functionals
  if (params.R > cd.R0) {
    c.instab = instability_criterion(params, c.lambda0, cd.R0, cd.xi);
    if (c.instab.exact) {
      c.verdict = Verdict::ProvablyUnstable;
      c.witness = "exact instability criterion";
      try {
        c.lambda_star = fixed_point_lambda(solver, search, 1e-10).lambda;
      } catch (const std::exception& e) {
        c.witness += std::string(" (growth-rate iteration failed: ") + e.what() + ")";
      }
      return c;
    }
  }

  auto u1 = upsilon1(solver, lattice);
  auto u2 = upsilon2(solver, lattice);
  if (!u1.tail_decreasing || !u2.tail_decreasing) {
    // supremum may extend past the cutoff; retry once with a doubled lattice
    c.a_max_used = 2.0 * a_max;
    lattice = build_lattice(params, c.a_max_used);
    u1 = upsilon1(solver, lattice);
    u2 = upsilon2(solver, lattice);
  }
  c.upsilon1 = u1.value;
  c.upsilon1_bound = u1.bound;
  c.upsilon2 = u2.value;
  c.upsilon2_alt = u2.alt_value;
  c.upsilon2_infinite = u2.infinite;
  if (u1.value < 1.0 && !u2.infinite && u2.value < 1.0) {
    c.verdict = Verdict::ProvablyStable;
    c.witness = "Upsilon1 < 1 and Upsilon2 < 1";
    return c;
  }

  c.verdict = Verdict::Indeterminate;
  c.witness = "no criterion applies";
  return c;
}

}  // namespace mbstab

#endif
