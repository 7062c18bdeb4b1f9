#ifndef MBSTAB_ASSEMBLY_HPP
#define MBSTAB_ASSEMBLY_HPP

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "mbstab/params.hpp"

namespace mbstab {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Per-mode quadratic-form matrices over vertical profiles (W, Theta) on [0,1].
/// W lives in a C1 cubic Hermite space (vertical velocity amplitude of the
/// poloidal field), Theta in a C0 quadratic space with Dirichlet ends.
///
/// With horizontal magnitude a, the per-mode reductions of the layer norms are
///   M_W      : int (W^2 + W'^2/a^2)            (velocity L2 norm)
///   G_W      : (1/a^2) int (W'' - a^2 W)^2     (velocity gradient norm)
///   D3_W     : int (W'^2 + W''^2/a^2)          (vertical-derivative norm)
///   W3       : int W^2                         (vertical-component-only L2)
///   M_Theta  : int Theta^2
///   G_Theta  : int (Theta'^2 + a^2 Theta^2)
///   C        : int W Theta                     (coupling, rectangular)
///   GC       : int (W' Theta' + a^2 W Theta)   (gradient coupling)
struct ModeForms {
  double a = 0.0;
  int elements = 0;
  int dof_W = 0;
  int dof_Theta = 0;
  BoundaryKind bc = BoundaryKind::Rigid;

  MatrixXd M_W, G_W, D3_W, W3;
  MatrixXd M_Theta, G_Theta;
  MatrixXd C, GC;

  // maps reduced dof index -> full dof index of the unconstrained space
  std::vector<int> free_W, free_Theta;
};

namespace detail {

// 5-point Gauss rule on [0,1]; exact through degree 9.
struct GaussRule {
  std::array<double, 5> x;
  std::array<double, 5> w;
};

inline const GaussRule& gauss5() {
  static const GaussRule rule = [] {
    GaussRule g;
    const double s70 = std::sqrt(70.0);
    const double n1 = std::sqrt(5.0 - 2.0 * s70 / 7.0) / 3.0;
    const double n2 = std::sqrt(5.0 + 2.0 * s70 / 7.0) / 3.0;
    const double w0 = 128.0 / 225.0;
    const double w1 = (322.0 + 13.0 * s70) / 900.0;
    const double w2 = (322.0 - 13.0 * s70) / 900.0;
    const std::array<double, 5> xs = {-n2, -n1, 0.0, n1, n2};
    const std::array<double, 5> ws = {w2, w1, w0, w1, w2};
    for (int i = 0; i < 5; ++i) {
      g.x[i] = 0.5 * (xs[i] + 1.0);
      g.w[i] = 0.5 * ws[i];
    }
    return g;
  }();
  return rule;
}

// Cubic Hermite shapes on the reference element [0,1] with element size h;
// val[j], d1[j], d2[j] are the shape value and z-derivatives for local dof j
// (left value, left slope, right value, right slope).
inline void hermite_shapes(double t, double h, double* val, double* d1, double* d2) {
  val[0] = 1.0 - 3.0 * t * t + 2.0 * t * t * t;
  val[1] = h * (t - 2.0 * t * t + t * t * t);
  val[2] = 3.0 * t * t - 2.0 * t * t * t;
  val[3] = h * (t * t * t - t * t);
  d1[0] = (-6.0 * t + 6.0 * t * t) / h;
  d1[1] = 1.0 - 4.0 * t + 3.0 * t * t;
  d1[2] = (6.0 * t - 6.0 * t * t) / h;
  d1[3] = 3.0 * t * t - 2.0 * t;
  d2[0] = (-6.0 + 12.0 * t) / (h * h);
  d2[1] = (-4.0 + 6.0 * t) / h;
  d2[2] = (6.0 - 12.0 * t) / (h * h);
  d2[3] = (6.0 * t - 2.0) / h;
}

// Quadratic Lagrange shapes (left vertex, midpoint, right vertex).
inline void quadratic_shapes(double t, double h, double* val, double* d1) {
  val[0] = 2.0 * (t - 0.5) * (t - 1.0);
  val[1] = -4.0 * t * (t - 1.0);
  val[2] = 2.0 * t * (t - 0.5);
  d1[0] = (4.0 * t - 3.0) / h;
  d1[1] = (4.0 - 8.0 * t) / h;
  d1[2] = (4.0 * t - 1.0) / h;
}

}  // namespace detail

inline ModeForms assemble_mode_forms(double a, int N, BoundaryKind bc) {
  if (!(a > 0.0)) throw std::invalid_argument("assemble_mode_forms: a must be positive");
  if (N < 4) throw std::invalid_argument("assemble_mode_forms: need N >= 4 elements");

  ModeForms f;
  f.a = a;
  f.elements = N;
  f.bc = bc;

  const int full_W = 2 * (N + 1);
  const int full_T = 2 * N + 1;
  std::vector<int> map_W(full_W, -1), map_T(full_T, -1);

  for (int i = 0; i < full_W; ++i) {
    const bool end_value = (i == 0 || i == full_W - 2);
    const bool end_slope = (i == 1 || i == full_W - 1);
    const bool constrained =
        bc == BoundaryKind::Rigid ? (end_value || end_slope) : end_value;
    if (!constrained) {
      map_W[i] = static_cast<int>(f.free_W.size());
      f.free_W.push_back(i);
    }
  }
  for (int i = 0; i < full_T; ++i) {
    if (i == 0 || i == full_T - 1) continue;
    map_T[i] = static_cast<int>(f.free_Theta.size());
    f.free_Theta.push_back(i);
  }
  f.dof_W = static_cast<int>(f.free_W.size());
  f.dof_Theta = static_cast<int>(f.free_Theta.size());

  f.M_W = MatrixXd::Zero(f.dof_W, f.dof_W);
  f.G_W = MatrixXd::Zero(f.dof_W, f.dof_W);
  f.D3_W = MatrixXd::Zero(f.dof_W, f.dof_W);
  f.W3 = MatrixXd::Zero(f.dof_W, f.dof_W);
  f.M_Theta = MatrixXd::Zero(f.dof_Theta, f.dof_Theta);
  f.G_Theta = MatrixXd::Zero(f.dof_Theta, f.dof_Theta);
  f.C = MatrixXd::Zero(f.dof_W, f.dof_Theta);
  f.GC = MatrixXd::Zero(f.dof_W, f.dof_Theta);

  const double h = 1.0 / N;
  const double a2 = a * a;
  const auto& gr = detail::gauss5();

  double wv[4], wd1[4], wd2[4], tv[3], td1[3];
  for (int e = 0; e < N; ++e) {
    const int gw[4] = {2 * e, 2 * e + 1, 2 * e + 2, 2 * e + 3};
    const int gt[3] = {2 * e, 2 * e + 1, 2 * e + 2};
    for (int q = 0; q < 5; ++q) {
      const double wq = gr.w[q] * h;
      detail::hermite_shapes(gr.x[q], h, wv, wd1, wd2);
      detail::quadratic_shapes(gr.x[q], h, tv, td1);
      for (int i = 0; i < 4; ++i) {
        const int ri = map_W[gw[i]];
        if (ri < 0) continue;
        for (int j = 0; j < 4; ++j) {
          const int rj = map_W[gw[j]];
          if (rj < 0) continue;
          f.M_W(ri, rj) += wq * (wv[i] * wv[j] + wd1[i] * wd1[j] / a2);
          f.G_W(ri, rj) +=
              wq * (wd2[i] - a2 * wv[i]) * (wd2[j] - a2 * wv[j]) / a2;
          f.D3_W(ri, rj) += wq * (wd1[i] * wd1[j] + wd2[i] * wd2[j] / a2);
          f.W3(ri, rj) += wq * wv[i] * wv[j];
        }
        for (int j = 0; j < 3; ++j) {
          const int rj = map_T[gt[j]];
          if (rj < 0) continue;
          f.C(ri, rj) += wq * wv[i] * tv[j];
          f.GC(ri, rj) += wq * (wd1[i] * td1[j] + a2 * wv[i] * tv[j]);
        }
      }
      for (int i = 0; i < 3; ++i) {
        const int ri = map_T[gt[i]];
        if (ri < 0) continue;
        for (int j = 0; j < 3; ++j) {
          const int rj = map_T[gt[j]];
          if (rj < 0) continue;
          f.M_Theta(ri, rj) += wq * tv[i] * tv[j];
          f.G_Theta(ri, rj) += wq * (td1[i] * td1[j] + a2 * tv[i] * tv[j]);
        }
      }
    }
  }

  // mass forms must factor; catches dof-map or quadrature mistakes early
  if (Eigen::LLT<MatrixXd>(f.M_W).info() != Eigen::Success ||
      Eigen::LLT<MatrixXd>(f.M_Theta).info() != Eigen::Success)
    throw std::runtime_error("assemble_mode_forms: mass matrix not positive definite");

  return f;
}

inline double quadratic_form_value(const MatrixXd& form, const VectorXd& coeffs) {
  if (form.rows() != coeffs.size() || form.cols() != coeffs.size())
    throw std::invalid_argument("quadratic_form_value: dimension mismatch");
  return coeffs.dot(form * coeffs);
}

inline double bilinear_form_value(const MatrixXd& form, const VectorXd& x, const VectorXd& y) {
  if (form.rows() != x.size() || form.cols() != y.size())
    throw std::invalid_argument("bilinear_form_value: dimension mismatch");
  return x.dot(form * y);
}

/// Interpolant of f in the W space (nodal values and slopes), reduced dofs.
inline VectorXd interpolate_W(const ModeForms& forms,
                              const std::function<double(double)>& f,
                              const std::function<double(double)>& fprime) {
  const int N = forms.elements;
  VectorXd full(2 * (N + 1));
  for (int i = 0; i <= N; ++i) {
    const double z = static_cast<double>(i) / N;
    full[2 * i] = f(z);
    full[2 * i + 1] = fprime(z);
  }
  VectorXd out(forms.dof_W);
  for (int r = 0; r < forms.dof_W; ++r) out[r] = full[forms.free_W[r]];
  return out;
}

/// Interpolant of f in the Theta space (vertex and midpoint values), reduced dofs.
inline VectorXd interpolate_Theta(const ModeForms& forms,
                                  const std::function<double(double)>& f) {
  const int N = forms.elements;
  VectorXd full(2 * N + 1);
  for (int i = 0; i <= 2 * N; ++i) full[i] = f(0.5 * i / N);
  VectorXd out(forms.dof_Theta);
  for (int r = 0; r < forms.dof_Theta; ++r) out[r] = full[forms.free_Theta[r]];
  return out;
}

/// Evaluates a W profile (deriv = 0,1,2) at z from reduced coefficients.
inline double eval_W(const ModeForms& forms, const VectorXd& coeffs, double z, int deriv = 0) {
  const int N = forms.elements;
  const double h = 1.0 / N;
  int e = std::min(static_cast<int>(z * N), N - 1);
  const double t = z * N - e;
  double v[4], d1[4], d2[4];
  detail::hermite_shapes(t, h, v, d1, d2);
  const double* s = deriv == 0 ? v : (deriv == 1 ? d1 : d2);
  VectorXd full = VectorXd::Zero(2 * (N + 1));
  for (int r = 0; r < forms.dof_W; ++r) full[forms.free_W[r]] = coeffs[r];
  double out = 0.0;
  for (int j = 0; j < 4; ++j) out += s[j] * full[2 * e + j];
  return out;
}

}  // namespace mbstab

#endif
