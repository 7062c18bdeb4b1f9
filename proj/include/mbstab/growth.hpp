#ifndef MBSTAB_GROWTH_HPP
#define MBSTAB_GROWTH_HPP

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "mbstab/variational.hpp"

namespace mbstab {

struct PreconditionFailed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NoConvergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Growth rate Lambda(tau) with the fixed-point iteration trace.
struct GrowthResult {
  double lambda = 0.0;
  double lambda0 = 0.0;
  double a_star = 0.0;
  VectorXd W, Theta;
  std::vector<std::array<double, 3>> trace;  // (iteration, s_n, alpha(s_n))
  double fixed_point_residual = 0.0;
  bool precondition_ok = false;
  bool beyond_lemma = false;  // numeric precondition held, lemma condition did not
};

/// Lemma bracketing bounds for Lambda* = Lambda(1):
///   Lambda0 - sqrt(Q*Rcal) <= Lambda* <= (1-sqrt(Q))*Lambda0 + R*sqrt(Q/P)
/// with Rcal = R/sqrt(P) - Lambda0. Requires Q in [0,1).
inline std::pair<double, double> lambda_star_bounds(const Params& p, double lambda0,
                                                    double R0) {
  if (!(p.Q >= 0.0 && p.Q < 1.0))
    throw std::invalid_argument("lambda_star_bounds: Q must lie in [0,1)");
  if (!(p.R > R0)) throw std::invalid_argument("lambda_star_bounds: requires R > R0");
  if (!(lambda0 > 0.0))
    throw std::invalid_argument("lambda_star_bounds: requires Lambda0 > 0");
  const double rcal = std::max(0.0, p.R / std::sqrt(p.P_theta) - lambda0);
  const double lower = lambda0 - std::sqrt(p.Q * rcal);
  const double upper =
      (1.0 - std::sqrt(p.Q)) * lambda0 + p.R * std::sqrt(p.Q / p.P_theta);
  return {lower, upper};
}

/// Least fixed point of s -> alpha(s, tau) on [Lambda0/2, R/sqrt(P)], reached
/// by monotone iteration from s0 = Lambda0/2. The curve is nondecreasing in s
/// and bounded above, so the iterates increase to the fixed point.
inline GrowthResult fixed_point_lambda(const VariationalSolver& solver,
                                       const SearchSpec& search, double tol = 1e-10,
                                       int max_iter = 200) {
  const Params& p = solver.params();
  VariationalResult l0 = solver.lambda0(search);
  if (!(l0.value > 0.0))
    throw PreconditionFailed("fixed_point_lambda: Lambda0 <= 0 (convection condition fails)");

  GrowthResult g;
  g.lambda0 = l0.value;
  const double rcal = std::max(0.0, p.R / std::sqrt(p.P_theta) - l0.value);
  const bool lemma_ok =
      rcal == 0.0 || std::sqrt(p.Q) <= l0.value / (2.0 * std::sqrt(rcal));

  double s = 0.5 * l0.value;
  VariationalResult cur = solver.alpha(s, search);
  g.trace.push_back({0.0, s, cur.value});
  if (!(cur.value > s))
    throw PreconditionFailed("fixed_point_lambda: alpha(Lambda0/2) <= Lambda0/2");
  g.precondition_ok = true;
  g.beyond_lemma = !lemma_ok;

  bool converged = false;
  for (int n = 1; n <= max_iter; ++n) {
    const double s_next = cur.value;
    cur = solver.alpha(s_next, search);
    g.trace.push_back({static_cast<double>(n), s_next, cur.value});
    s = s_next;
    if (std::abs(cur.value - s) <= tol * std::max(1.0, s)) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw NoConvergence("fixed_point_lambda: no convergence after iteration cap");

  g.lambda = cur.value;
  g.a_star = cur.a_star;
  g.W = cur.W;
  g.Theta = cur.Theta;
  // re-evaluated independently of the last iterate
  g.fixed_point_residual = std::abs(solver.alpha(g.lambda, search).value - g.lambda);
  return g;
}

}  // namespace mbstab

#endif
