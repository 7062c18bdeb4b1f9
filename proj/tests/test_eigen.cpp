#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "mbstab/eigen_solver.hpp"

using namespace mbstab;

namespace {

MatrixXd random_symmetric(int n, std::mt19937& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  MatrixXd A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = gauss(rng);
  return 0.5 * (A + A.transpose());
}

MatrixXd random_spd(int n, std::mt19937& rng) {
  MatrixXd A = random_symmetric(n, rng);
  return A * A.transpose() + n * MatrixXd::Identity(n, n);
}

}  // namespace

TEST_CASE("dense path matches a direct nonsymmetric oracle") {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    const int n = 20;
    MatrixXd A = random_symmetric(n, rng);
    MatrixXd B = random_spd(n, rng);
    auto r = max_generalized_eigenpair(A, B);
    // oracle: eigenvalues of B^{-1} A
    Eigen::EigenSolver<MatrixXd> es(B.inverse() * A);
    double lam = -1e300;
    for (int i = 0; i < n; ++i) lam = std::max(lam, es.eigenvalues()[i].real());
    CHECK(r.value == Catch::Approx(lam).epsilon(1e-10));
    CHECK(r.residual < 1e-8 * A.cwiseAbs().maxCoeff());
    // B-normalized
    CHECK(r.vector.dot(B * r.vector) == Catch::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("eigenvalue transforms correctly under shift and scale") {
  std::mt19937 rng(11);
  const int n = 15;
  MatrixXd A = random_symmetric(n, rng);
  MatrixXd B = random_spd(n, rng);
  const double lam = max_generalized_eigenpair(A, B).value;
  const double shifted = max_generalized_eigenpair(MatrixXd(A + 3.0 * B), B).value;
  CHECK(shifted == Catch::Approx(lam + 3.0).epsilon(1e-10));
  const double scaled = max_generalized_eigenpair(MatrixXd(2.5 * A), B).value;
  CHECK(scaled == Catch::Approx(2.5 * lam).epsilon(1e-10));
}

TEST_CASE("iterative path agrees with the dense solver on a large pencil") {
  std::mt19937 rng(23);
  const int n = 400;  // above the dense-path cutoff
  MatrixXd A = random_symmetric(n, rng);
  MatrixXd B = random_spd(n, rng);
  auto r = max_generalized_eigenpair(A, B, 1e-10);
  Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> dense(A, B);
  CHECK(r.value == Catch::Approx(dense.eigenvalues()[n - 1]).epsilon(1e-9));
  CHECK(r.residual < 1e-8 * A.cwiseAbs().maxCoeff());
}

TEST_CASE("dimension mismatch is rejected") {
  CHECK_THROWS_AS(max_generalized_eigenpair(MatrixXd::Zero(3, 3), MatrixXd::Identity(4, 4)),
                  std::invalid_argument);
}

TEST_CASE("coupled-system spectrum matches the growth functional when Q = 0") {
  Params p;
  p.R = std::sqrt(2500.0);
  auto f = assemble_mode_forms(3.117, 24, BoundaryKind::Rigid);
  CompanionSystem sys = build_companion(f, p);
  CHECK_FALSE(sys.has_eta);  // Q = 0 drops the flow-map block
  const auto rightmost = rightmost_eigen_companion(f, p);
  CHECK(rightmost.imag() == Catch::Approx(0.0).margin(1e-8));

  // variational oracle: largest eigenvalue of the symmetric growth pencil
  MatrixXd A = MatrixXd::Zero(f.dof_W + f.dof_Theta, f.dof_W + f.dof_Theta);
  A.topLeftCorner(f.dof_W, f.dof_W) = -f.G_W;
  A.topRightCorner(f.dof_W, f.dof_Theta) = p.R * f.C;
  A.bottomLeftCorner(f.dof_Theta, f.dof_W) = p.R * f.C.transpose();
  A.bottomRightCorner(f.dof_Theta, f.dof_Theta) = -f.G_Theta;
  MatrixXd B = MatrixXd::Zero(A.rows(), A.cols());
  B.topLeftCorner(f.dof_W, f.dof_W) = f.M_W;
  B.bottomRightCorner(f.dof_Theta, f.dof_Theta) = p.P_theta * f.M_Theta;
  const double lam = max_generalized_eigenpair(A, B).value;
  CHECK(rightmost.real() == Catch::Approx(lam).epsilon(1e-6));
}

TEST_CASE("pure diffusion decays at the slower of the two diffusive rates") {
  // R -> 0 decouples the fields; the rightmost eigenvalue approaches
  // -min(pi^2 + a^2, (pi^2 + a^2)/P) for stress-free walls
  Params p;
  p.R = 1e-12;
  p.P_theta = 4.0;
  const double a = 0.7;
  auto f = assemble_mode_forms(a, 48, BoundaryKind::StressFree);
  const double rate = rightmost_eigen_companion(f, p).real();
  const double ref = -(M_PI * M_PI + a * a) / 4.0;  // temperature branch is slower
  CHECK(rate == Catch::Approx(ref).epsilon(1e-4));
}

TEST_CASE("zero coupling leaves only decaying dynamics") {
  Params p;
  p.R = 1e-300;
  p.Q = 2.0;
  auto f = assemble_mode_forms(2.0, 16, BoundaryKind::Rigid);
  CompanionSystem sys = build_companion(f, p);
  CHECK(sys.has_eta);
  Eigen::PartialPivLU<MatrixXd> lu(sys.M);
  Eigen::EigenSolver<MatrixXd> es(MatrixXd(lu.solve(sys.K)));
  for (int i = 0; i < sys.M.rows(); ++i) CHECK(es.eigenvalues()[i].real() < 1e-10);
}
