#ifndef MBSTAB_EIGEN_SOLVER_HPP
#define MBSTAB_EIGEN_SOLVER_HPP

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "mbstab/assembly.hpp"
#include "mbstab/params.hpp"

namespace mbstab {

/// Largest generalized eigenpair of a symmetric-definite pencil (A, B).
/// The vector is B-normalized and sign-normalized so its first nonzero
/// coefficient is positive.
struct EigenResult {
  double value = 0.0;
  VectorXd vector;
  double residual = 0.0;
  int dim = 0;
};

namespace detail {

inline void sign_normalize(VectorXd& x) {
  const double scale = x.cwiseAbs().maxCoeff();
  for (int i = 0; i < x.size(); ++i) {
    if (std::abs(x[i]) > 1e-12 * scale) {
      if (x[i] < 0.0) x = -x;
      return;
    }
  }
}

inline EigenResult finalize_pair(const MatrixXd& A, const MatrixXd& B, double value,
                                 VectorXd x) {
  const double bnorm = std::sqrt(x.dot(B * x));
  x /= bnorm;
  sign_normalize(x);
  EigenResult r;
  r.value = value;
  r.vector = x;
  r.residual = (A * x - value * (B * x)).norm() / x.norm();
  r.dim = static_cast<int>(A.rows());
  return r;
}

// Lanczos in the B-inner product with full reorthogonalization; returns the
// largest Ritz value once its residual bound drops below tol. Deterministic
// (fixed start vector).
inline bool lanczos_max(const MatrixXd& A, const MatrixXd& B,
                        const Eigen::LLT<MatrixXd>& bllt, double tol, double* value,
                        VectorXd* vec) {
  const int n = static_cast<int>(A.rows());
  const int m_max = std::min(n, 220);
  std::vector<VectorXd> V;
  std::vector<VectorXd> BV;
  std::vector<double> alpha, beta;

  VectorXd v = VectorXd::Ones(n);
  VectorXd bv = B * v;
  v /= std::sqrt(v.dot(bv));
  bv = B * v;
  V.push_back(v);
  BV.push_back(bv);

  double lam_prev = 0.0;
  Eigen::SelfAdjointEigenSolver<MatrixXd> tri;
  for (int j = 0; j < m_max; ++j) {
    VectorXd w = bllt.solve(A * V[j]);
    const double aj = w.dot(BV[j]);
    alpha.push_back(aj);
    w -= aj * V[j];
    if (j > 0) w -= beta[j - 1] * V[j - 1];
    // full reorthogonalization against the B-orthonormal basis, twice
    for (int pass = 0; pass < 2; ++pass)
      for (size_t i = 0; i < V.size(); ++i) w -= (w.dot(BV[i])) * V[i];
    const double bj = std::sqrt(std::max(0.0, w.dot(B * w)));

    const int m = j + 1;
    const bool check = (m >= 8 && m % 4 == 0) || m == m_max || bj < 1e-14;
    if (check) {
      MatrixXd T = MatrixXd::Zero(m, m);
      for (int i = 0; i < m; ++i) T(i, i) = alpha[i];
      for (int i = 0; i + 1 < m; ++i) T(i, i + 1) = T(i + 1, i) = beta[i];
      tri.compute(T);
      const double lam = tri.eigenvalues()[m - 1];
      const double bound = bj * std::abs(tri.eigenvectors()(m - 1, m - 1));
      const double scale = std::max(1.0, std::abs(lam));
      if (bound < 0.05 * tol * scale ||
          (bj < 1e-14 && std::abs(lam - lam_prev) < 1e-14 * scale)) {
        VectorXd y = tri.eigenvectors().col(m - 1);
        VectorXd x = VectorXd::Zero(n);
        for (int i = 0; i < m; ++i) x += y[i] * V[i];
        *value = lam;
        *vec = x;
        return true;
      }
      lam_prev = lam;
      if (bj < 1e-14) return false;
    }
    if (j + 1 < m_max) {
      beta.push_back(bj);
      v = w / bj;
      V.push_back(v);
      BV.push_back(B * v);
    }
  }
  return false;
}

}  // namespace detail

/// Largest eigenvalue and B-normalized eigenvector of A x = lambda B x with A
/// symmetric and B symmetric positive definite. Dense for small problems; for
/// larger ones a deterministic Lanczos iteration with a dense fallback. A
/// precomputed Cholesky factorization of B may be supplied.
inline EigenResult max_generalized_eigenpair(const MatrixXd& A, const MatrixXd& B,
                                             double tol = 1e-8,
                                             const Eigen::LLT<MatrixXd>* bllt = nullptr) {
  if (A.rows() != A.cols() || B.rows() != B.cols() || A.rows() != B.rows())
    throw std::invalid_argument("max_generalized_eigenpair: dimension mismatch");
  const int n = static_cast<int>(A.rows());

  if (n > 260) {
    Eigen::LLT<MatrixXd> local;
    const Eigen::LLT<MatrixXd>* llt = bllt;
    if (!llt) {
      local.compute(B);
      if (local.info() != Eigen::Success)
        throw std::runtime_error("max_generalized_eigenpair: B is not positive definite");
      llt = &local;
    }
    double lam;
    VectorXd x;
    if (detail::lanczos_max(A, B, *llt, tol, &lam, &x)) {
      EigenResult r = detail::finalize_pair(A, B, lam, x);
      const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
      if (r.residual <= tol * scale) return r;
    }
    // fall through to the dense path if the iteration stalled
  }

  Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> es(A, B,
                                                        Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("max_generalized_eigenpair: factorization failed (B not SPD?)");
  return detail::finalize_pair(A, B, es.eigenvalues()[n - 1], es.eigenvectors().col(n - 1));
}

/// All eigenvalues/vectors of the pencil (dense); used where near-degenerate
/// maximizer sets are needed.
inline Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> full_generalized_eigen(
    const MatrixXd& A, const MatrixXd& B) {
  Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> es(A, B,
                                                        Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("full_generalized_eigen: factorization failed");
  return es;
}

/// Per-mode linear-system blocks of the coupled (eta, u, theta) evolution
///   M_W  eta' = M_W u
///   M_W  u'   = -tau G_W u - Q D3_W eta + R C theta
///   P M_T th' = -G_Theta theta + R C^T u
/// For Q = 0 the eta block decouples (and carries only zero eigenvalues), so
/// the state reduces to (u, theta).
struct CompanionSystem {
  MatrixXd M;  // block mass
  MatrixXd K;  // block stiffness
  bool has_eta = false;
};

inline CompanionSystem build_companion(const ModeForms& f, const Params& p) {
  CompanionSystem sys;
  const int nw = f.dof_W, nt = f.dof_Theta;
  sys.has_eta = p.Q > 0.0;
  const int n = sys.has_eta ? 2 * nw + nt : nw + nt;
  sys.M = MatrixXd::Zero(n, n);
  sys.K = MatrixXd::Zero(n, n);
  const int iu = sys.has_eta ? nw : 0;
  const int it = iu + nw;
  if (sys.has_eta) {
    sys.M.block(0, 0, nw, nw) = f.M_W;
    sys.K.block(0, iu, nw, nw) = f.M_W;
    sys.K.block(iu, 0, nw, nw) = -p.Q * f.D3_W;
  }
  sys.M.block(iu, iu, nw, nw) = f.M_W;
  sys.M.block(it, it, nt, nt) = p.P_theta * f.M_Theta;
  sys.K.block(iu, iu, nw, nw) -= p.tau * f.G_W;
  sys.K.block(iu, it, nw, nt) = p.R * f.C;
  sys.K.block(it, iu, nt, nw) = p.R * f.C.transpose();
  sys.K.block(it, it, nt, nt) = -f.G_Theta;
  return sys;
}

/// Eigenvalue of largest real part of the companion system; the nonsymmetric
/// cross-check oracle for the variational growth rate.
inline std::complex<double> rightmost_eigen_companion(const ModeForms& f, const Params& p) {
  const CompanionSystem sys = build_companion(f, p);
  Eigen::PartialPivLU<MatrixXd> lu(sys.M);
  if (std::abs(lu.determinant()) == 0.0)
    throw std::runtime_error("rightmost_eigen_companion: singular mass block");
  const MatrixXd L = lu.solve(sys.K);
  Eigen::EigenSolver<MatrixXd> es(L, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("rightmost_eigen_companion: eigensolver failed");
  std::complex<double> best(-std::numeric_limits<double>::infinity(), 0.0);
  for (int i = 0; i < L.rows(); ++i)
    if (es.eigenvalues()[i].real() > best.real()) best = es.eigenvalues()[i];
  return best;
}

}  // namespace mbstab

#endif
