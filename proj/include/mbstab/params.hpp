#ifndef MBSTAB_PARAMS_HPP
#define MBSTAB_PARAMS_HPP

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace mbstab {

enum class BoundaryKind { Rigid, StressFree };

inline std::string to_string(BoundaryKind bc) {
  return bc == BoundaryKind::Rigid ? "rigid" : "stress-free";
}

inline BoundaryKind parse_boundary_kind(const std::string& s) {
  if (s == "rigid" || s == "Rigid") return BoundaryKind::Rigid;
  if (s == "stress-free" || s == "stressfree" || s == "StressFree" || s == "free")
    return BoundaryKind::StressFree;
  throw std::invalid_argument("unknown boundary condition kind: " + s);
}

/// Dimensionless problem parameters of the horizontally periodic layer.
/// R is the square root of the Rayleigh number, Q the Chandrasekhar number,
/// P_theta the Prandtl number; the horizontal periods are 2*pi*L1 and 2*pi*L2.
struct Params {
  double R = 1.0;
  double Q = 0.0;
  double P_theta = 1.0;
  double tau = 1.0;
  double L1 = 1.0;
  double L2 = 1.0;
  BoundaryKind bc = BoundaryKind::Rigid;
};

inline Params validate_params(const Params& raw) {
  if (!(raw.R > 0.0)) throw std::invalid_argument("R must be positive");
  if (!(raw.Q >= 0.0)) throw std::invalid_argument("Q must be nonnegative");
  if (!(raw.P_theta > 0.0)) throw std::invalid_argument("P_theta must be positive");
  if (!(raw.tau > 0.0 && raw.tau <= 1.0)) throw std::invalid_argument("tau must lie in (0,1]");
  if (!(raw.L1 > 0.0)) throw std::invalid_argument("L1 must be positive");
  if (!(raw.L2 > 0.0)) throw std::invalid_argument("L2 must be positive");
  return raw;
}

/// One horizontal mode of the periodic layer. k1 = n1/L1, k2 = n2/L2 with
/// (n1,n2) integers not both zero; a = sqrt(k1^2+k2^2). continuous_flag marks
/// magnitudes treated as free positive scalars rather than lattice points.
struct Wavenumber {
  double k1 = 0.0;
  double k2 = 0.0;
  double a = 0.0;
  bool continuous_flag = false;
};

inline Wavenumber continuous_wavenumber(double a) {
  if (!(a > 0.0)) throw std::invalid_argument("wavenumber magnitude must be positive");
  return Wavenumber{a, 0.0, a, true};
}

/// Enumerates one representative per sign class (n1,n2) ~ (+-n1,+-n2) with
/// 0 < a <= a_max, sorted by (a, k1, k2). The zero mode is excluded.
inline std::vector<Wavenumber> build_lattice(const Params& params, double a_max) {
  if (!(a_max > 0.0)) throw std::invalid_argument("a_max must be positive");
  std::vector<Wavenumber> out;
  const int n1_max = static_cast<int>(std::floor(a_max * params.L1));
  const int n2_max = static_cast<int>(std::floor(a_max * params.L2));
  for (int n1 = 0; n1 <= n1_max; ++n1) {
    for (int n2 = 0; n2 <= n2_max; ++n2) {
      if (n1 == 0 && n2 == 0) continue;
      const double k1 = n1 / params.L1;
      const double k2 = n2 / params.L2;
      const double a = std::hypot(k1, k2);
      if (a <= a_max) out.push_back(Wavenumber{k1, k2, a, false});
    }
  }
  std::sort(out.begin(), out.end(), [](const Wavenumber& x, const Wavenumber& y) {
    if (x.a != y.a) return x.a < y.a;
    if (x.k1 != y.k1) return x.k1 < y.k1;
    return x.k2 < y.k2;
  });
  return out;
}

}  // namespace mbstab

#endif
