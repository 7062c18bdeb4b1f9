#ifndef MBSTAB_VARIATIONAL_HPP
#define MBSTAB_VARIATIONAL_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <tuple>
#include <utility>
#include <variant>
#include <vector>

#include "mbstab/assembly.hpp"
#include "mbstab/eigen_solver.hpp"
#include "mbstab/params.hpp"

namespace mbstab {

/// Continuous bracket search: coarse log-spaced scan, then golden-section
/// refinement around the best scan point.
struct ContinuousSearch {
  double a_lo = 0.3;
  double a_hi = 12.0;
  int scan_points = 64;
  double rel_tol = 1e-7;
};

struct LatticeSearch {
  std::vector<Wavenumber> modes;
};

using SearchSpec = std::variant<ContinuousSearch, LatticeSearch>;

struct VariationalResult {
  double value = 0.0;
  double a_star = 0.0;
  std::optional<std::array<double, 2>> k_star;
  VectorXd W, Theta;
  double eigen_residual = 0.0;
  std::vector<std::pair<double, double>> per_mode_curve;
};

namespace detail {

inline std::uint64_t dbits(double x) {
  std::uint64_t u;
  std::memcpy(&u, &x, sizeof(u));
  return u;
}

}  // namespace detail

/// Shared, thread-safe cache of assembled ModeForms and mass factorizations.
/// Forms depend only on (a, N, bc), so a single cache serves whole sweeps.
class FormsCache {
 public:
  std::shared_ptr<const ModeForms> get(double a, int N, BoundaryKind bc) {
    const Key k{detail::dbits(a), N, static_cast<int>(bc)};
    {
      std::lock_guard<std::mutex> lock(mu_);
      auto it = forms_.find(k);
      if (it != forms_.end()) return it->second;
    }
    auto f = std::make_shared<const ModeForms>(assemble_mode_forms(a, N, bc));
    std::lock_guard<std::mutex> lock(mu_);
    return forms_.emplace(k, std::move(f)).first->second;
  }

  // Cholesky of blockdiag(M_W, P_theta * M_Theta), the J-constraint mass.
  std::shared_ptr<const Eigen::LLT<MatrixXd>> j_mass_llt(const ModeForms& f, int N,
                                                         double P_theta) {
    return llt_cached({detail::dbits(f.a), N, static_cast<int>(f.bc),
                       detail::dbits(P_theta), 0},
                      [&] {
                        MatrixXd B = MatrixXd::Zero(f.dof_W + f.dof_Theta,
                                                    f.dof_W + f.dof_Theta);
                        B.topLeftCorner(f.dof_W, f.dof_W) = f.M_W;
                        B.bottomRightCorner(f.dof_Theta, f.dof_Theta) =
                            P_theta * f.M_Theta;
                        return B;
                      });
  }

  // Cholesky of blockdiag(G_W, G_Theta), the gradient-norm mass.
  std::shared_ptr<const Eigen::LLT<MatrixXd>> grad_mass_llt(const ModeForms& f, int N) {
    return llt_cached({detail::dbits(f.a), N, static_cast<int>(f.bc), 0, 1}, [&] {
      MatrixXd B = MatrixXd::Zero(f.dof_W + f.dof_Theta, f.dof_W + f.dof_Theta);
      B.topLeftCorner(f.dof_W, f.dof_W) = f.G_W;
      B.bottomRightCorner(f.dof_Theta, f.dof_Theta) = f.G_Theta;
      return B;
    });
  }

  // lambda_max(M_W, G_W); parameter-free, reused by the upsilon2 evaluation.
  double mw_over_gw(const ModeForms& f, int N) {
    const ScalarKey k{detail::dbits(f.a), N, static_cast<int>(f.bc)};
    {
      std::lock_guard<std::mutex> lock(mu_);
      auto it = scalars_.find(k);
      if (it != scalars_.end()) return it->second;
    }
    const double v = max_generalized_eigenpair(f.M_W, f.G_W).value;
    std::lock_guard<std::mutex> lock(mu_);
    return scalars_.emplace(k, v).first->second;
  }

 private:
  using Key = std::tuple<std::uint64_t, int, int>;
  using LltKey = std::tuple<std::uint64_t, int, int, std::uint64_t, int>;
  using ScalarKey = std::tuple<std::uint64_t, int, int>;

  template <typename MakeB>
  std::shared_ptr<const Eigen::LLT<MatrixXd>> llt_cached(const LltKey& k, MakeB&& make) {
    {
      std::lock_guard<std::mutex> lock(mu_);
      auto it = llts_.find(k);
      if (it != llts_.end()) return it->second;
    }
    auto llt = std::make_shared<const Eigen::LLT<MatrixXd>>(make());
    if (llt->info() != Eigen::Success)
      throw std::runtime_error("FormsCache: mass factorization failed");
    std::lock_guard<std::mutex> lock(mu_);
    return llts_.emplace(k, std::move(llt)).first->second;
  }

  std::mutex mu_;
  std::map<Key, std::shared_ptr<const ModeForms>> forms_;
  std::map<LltKey, std::shared_ptr<const Eigen::LLT<MatrixXd>>> llts_;
  std::map<ScalarKey, double> scalars_;
};

namespace detail {

inline MatrixXd joint2(const MatrixXd& Aww, const MatrixXd& Awt, const MatrixXd& Att) {
  const int nw = static_cast<int>(Aww.rows()), nt = static_cast<int>(Att.rows());
  MatrixXd J = MatrixXd::Zero(nw + nt, nw + nt);
  J.topLeftCorner(nw, nw) = Aww;
  J.topRightCorner(nw, nt) = Awt;
  J.bottomLeftCorner(nt, nw) = Awt.transpose();
  J.bottomRightCorner(nt, nt) = Att;
  return J;
}

struct ModeMax {
  double value = 0.0;
  double a_star = 0.0;
  std::optional<std::array<double, 2>> k_star;
  std::vector<std::pair<double, double>> curve;
};

// Maximizes a per-mode value over the search specification. Lattice entries
// are deduplicated by magnitude when the functional depends on a only; ties
// resolve toward smaller a (then smaller k1).
template <typename F>
ModeMax maximize_over(const SearchSpec& search, F&& eval) {
  ModeMax out;
  if (const auto* cs = std::get_if<ContinuousSearch>(&search)) {
    if (!(cs->a_lo > 0.0 && cs->a_hi > cs->a_lo) || cs->scan_points < 2)
      throw std::invalid_argument("invalid continuous search bracket");
    const int n = cs->scan_points;
    std::vector<double> as(n), vs(n);
    const double lr = std::log(cs->a_lo), dr = (std::log(cs->a_hi) - lr) / (n - 1);
    int best = 0;
    for (int i = 0; i < n; ++i) {
      as[i] = std::exp(lr + i * dr);
      vs[i] = eval(as[i]);
      out.curve.emplace_back(as[i], vs[i]);
      if (vs[i] > vs[best]) best = i;
    }
    double lo = as[std::max(0, best - 1)];
    double hi = as[std::min(n - 1, best + 1)];
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = hi - gr * (hi - lo), d = lo + gr * (hi - lo);
    double fc = eval(c), fd = eval(d);
    while (hi - lo > cs->rel_tol * 0.5 * (lo + hi)) {
      if (fc > fd) {
        hi = d;
        d = c;
        fd = fc;
        c = hi - gr * (hi - lo);
        fc = eval(c);
      } else {
        lo = c;
        c = d;
        fc = fd;
        d = lo + gr * (hi - lo);
        fd = eval(d);
      }
    }
    out.a_star = 0.5 * (lo + hi);
    out.value = eval(out.a_star);
    // the refinement never loses to the scan
    if (vs[best] > out.value) {
      out.value = vs[best];
      out.a_star = as[best];
    }
    return out;
  }
  const auto& lat = std::get<LatticeSearch>(search);
  if (lat.modes.empty()) throw std::invalid_argument("empty wavenumber search set");
  std::map<double, double> by_a;
  bool first = true;
  for (const auto& k : lat.modes) {
    double v;
    auto it = by_a.find(k.a);
    if (it != by_a.end()) {
      v = it->second;
    } else {
      v = eval(k.a);
      by_a.emplace(k.a, v);
      out.curve.emplace_back(k.a, v);
    }
    if (first || v > out.value) {
      out.value = v;
      out.a_star = k.a;
      out.k_star = std::array<double, 2>{k.k1, k.k2};
      first = false;
    }
  }
  return out;
}

}  // namespace detail

/// Computes the variationally defined scalars of one parameter point by
/// assembling per-mode pencils and extremizing over wavenumbers.
class VariationalSolver {
 public:
  VariationalSolver(Params params, int resolution,
                    std::shared_ptr<FormsCache> cache = nullptr)
      : params_(validate_params(params)),
        N_(resolution),
        cache_(cache ? std::move(cache) : std::make_shared<FormsCache>()) {}

  const Params& params() const { return params_; }
  int resolution() const { return N_; }
  FormsCache& cache() { return *cache_; }

  std::shared_ptr<const ModeForms> forms(double a) const {
    return cache_->get(a, N_, params_.bc);
  }

  /// Largest growth of thermal instability: sup over J=1 profiles of
  /// 2R int(w3 theta) - |grad w|^2 - |grad theta|^2, maximized over modes.
  VariationalResult lambda0(const SearchSpec& search) const {
    auto mm = detail::maximize_over(search, [&](double a) { return lambda0_mode(a).value; });
    return finish(mm, lambda0_mode(mm.a_star));
  }

  /// Critical convection parameter: per mode mu(a) is the largest eigenvalue
  /// of (2 C_sym, G_W + G_Theta); R0 = 1/max mu. value holds R0 and R0^2 is
  /// the classical critical Rayleigh number for the boundary condition.
  VariationalResult critical_R0(const SearchSpec& search) const {
    auto mm = detail::maximize_over(search, [&](double a) { return r0_mode(a).value; });
    if (!(mm.value > 0.0))
      throw std::runtime_error("critical_R0: nonpositive coupling supremum");
    VariationalResult r = finish(mm, r0_mode(mm.a_star));
    r.value = 1.0 / mm.value;
    return r;
  }

  /// Maximal coupling int(w3 theta) over the J-normalized critical profiles
  /// of the R0 problem (eigenvalues within rel_band of the maximum, over all
  /// wavenumbers achieving the maximum within the same band).
  double xi(const SearchSpec& search, double rel_band = 1e-8) const {
    auto mm = detail::maximize_over(search, [&](double a) { return r0_mode(a).value; });
    const double mu_max = mm.value;
    std::vector<double> candidates{mm.a_star};
    if (const auto* lat = std::get_if<LatticeSearch>(&search)) {
      for (const auto& k : lat->modes) {
        if (k.a == mm.a_star) continue;
        if (r0_mode(k.a).value >= mu_max * (1.0 - rel_band) &&
            std::find(candidates.begin(), candidates.end(), k.a) == candidates.end())
          candidates.push_back(k.a);
      }
    }
    double best = 0.0;
    for (double a : candidates) {
      auto f = forms(a);
      const MatrixXd A = detail::joint2(
          MatrixXd::Zero(f->dof_W, f->dof_W), f->C,
          MatrixXd::Zero(f->dof_Theta, f->dof_Theta));
      MatrixXd B = MatrixXd::Zero(A.rows(), A.cols());
      B.topLeftCorner(f->dof_W, f->dof_W) = f->G_W;
      B.bottomRightCorner(f->dof_Theta, f->dof_Theta) = f->G_Theta;
      auto es = full_generalized_eigen(A, B);
      for (int i = static_cast<int>(A.rows()) - 1; i >= 0; --i) {
        if (es.eigenvalues()[i] < mu_max * (1.0 - rel_band)) break;
        VectorXd x = es.eigenvectors().col(i);
        const VectorXd w = x.head(f->dof_W), th = x.tail(f->dof_Theta);
        const double J = quadratic_form_value(f->M_W, w) +
                         params_.P_theta * quadratic_form_value(f->M_Theta, th);
        const double c = bilinear_form_value(f->C, w, th) / J;
        best = std::max(best, c);
      }
    }
    return best;
  }

  /// The variational curve alpha(s, tau): sup over J=1 profiles of
  /// 2R int(w3 theta) - tau |grad w|^2 - |grad theta|^2 - (Q/s) |d3 w|^2.
  VariationalResult alpha(double s, const SearchSpec& search) const {
    if (!(s > 0.0)) throw std::invalid_argument("alpha: s must be positive");
    auto mm = detail::maximize_over(search, [&](double a) { return alpha_mode(a, s).value; });
    return finish(mm, alpha_mode(mm.a_star, s));
  }

  /// Per-mode pencil solves, exposed for cross-checks and fixed-a work.
  EigenResult lambda0_mode(double a) const {
    auto f = forms(a);
    return solve_growth_pencil(*f, 1.0, 0.0);
  }

  EigenResult alpha_mode(double a, double s) const {
    auto f = forms(a);
    return solve_growth_pencil(*f, params_.tau, params_.Q / s);
  }

  EigenResult r0_mode(double a) const {
    auto f = forms(a);
    const MatrixXd A = detail::joint2(MatrixXd::Zero(f->dof_W, f->dof_W), f->C,
                                      MatrixXd::Zero(f->dof_Theta, f->dof_Theta));
    MatrixXd B = MatrixXd::Zero(A.rows(), A.cols());
    B.topLeftCorner(f->dof_W, f->dof_W) = f->G_W;
    B.bottomRightCorner(f->dof_Theta, f->dof_Theta) = f->G_Theta;
    auto llt = cache_->grad_mass_llt(*f, N_);
    return max_generalized_eigenpair(A, B, 1e-8, llt.get());
  }

 private:
  EigenResult solve_growth_pencil(const ModeForms& f, double tau, double q_over_s) const {
    const MatrixXd A =
        detail::joint2(MatrixXd(-tau * f.G_W - q_over_s * f.D3_W), MatrixXd(params_.R * f.C),
                       MatrixXd(-f.G_Theta));
    MatrixXd B = MatrixXd::Zero(A.rows(), A.cols());
    B.topLeftCorner(f.dof_W, f.dof_W) = f.M_W;
    B.bottomRightCorner(f.dof_Theta, f.dof_Theta) = params_.P_theta * f.M_Theta;
    // The raw pencil spans many decades (stiffness below, growth value on
    // top), which starves the iterative path. Shift-invert at the analytic
    // upper bound R/sqrt(P) of the growth quotient: the largest eigenvalue mu
    // of (B, sigma B - A) maps monotonically to lambda = sigma - 1/mu, and
    // sigma B - A is positive definite.
    const double sigma = params_.R / std::sqrt(params_.P_theta) + 1.0;
    EigenResult r = max_generalized_eigenpair(B, MatrixXd(sigma * B - A), 1e-10);
    r.value = sigma - 1.0 / r.value;
    r.residual = (A * r.vector - r.value * (B * r.vector)).norm() / r.vector.norm();
    return r;
  }

  VariationalResult finish(const detail::ModeMax& mm, const EigenResult& pair) const {
    auto f = forms(mm.a_star);
    VariationalResult r;
    r.value = mm.value;
    r.a_star = mm.a_star;
    r.k_star = mm.k_star;
    r.W = pair.vector.head(f->dof_W);
    r.Theta = pair.vector.tail(f->dof_Theta);
    r.eigen_residual = pair.residual;
    r.per_mode_curve = mm.curve;
    return r;
  }

  Params params_;
  int N_;
  std::shared_ptr<FormsCache> cache_;
};

}  // namespace mbstab

#endif
