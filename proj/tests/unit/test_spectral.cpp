#include <cmath>
#include <functional>
#include <numbers>
#include <random>

#include "doctest.h"
#include "resonance_lab/error.hpp"
#include "resonance_lab/numerics.hpp"
#include "resonance_lab/spectral.hpp"
#include "support.hpp"

using namespace resonance_lab;

namespace {

double bisect(const std::function<double(double)>& f, double lo, double hi) {
  double flo = f(lo);
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm < 0) == (flo < 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

SystemModel flat_level(double bare, double rho_g2) {
  Eigen::MatrixXd hb(1, 1);
  hb << bare;
  Eigen::MatrixXd v(1, 1);
  v << std::sqrt(rho_g2);
  return SystemModel::from_values(hb, {Channel::flatband(1.0, 3.0, 1.0)}, v);
}

}  // namespace

TEST_SUITE("spectral") {

TEST_CASE("Hermitian limit") {
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(2, 2);
  h(0, 0) = 2.0;
  h(1, 1) = 1.0;
  const auto s = diagonalize_matrix(h, 0.0);
  CHECK(s.eigenvalues(0) == cplx(1.0, 0.0));
  CHECK(s.eigenvalues(1) == cplx(2.0, 0.0));
  CHECK(s.a_diag.isApproxToConstant(1.0, 1e-15));
  CHECK(s.phase_rigidity.isApproxToConstant(1.0, 1e-15));
  CHECK(std::abs(s.b_matrix(0, 1)) < 1e-15);
}

TEST_CASE("rank-one wideband 2x2") {
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Constant(2, 2, cplx(0.0, -1.0));
  const auto s = diagonalize_matrix(h, 0.0);
  CHECK(std::abs(s.eigenvalues(0) - cplx(0.0, -2.0)) < 1e-14);
  CHECK(std::abs(s.eigenvalues(1)) < 1e-14);
  const double r = 1.0 / std::sqrt(2.0);
  CHECK(std::abs(std::abs(s.right_eigenvectors(0, 0)) - r) < 1e-14);
  CHECK(std::abs(s.right_eigenvectors(0, 0) - s.right_eigenvectors(1, 0)) < 1e-14);
  CHECK(std::abs(s.right_eigenvectors(0, 1) + s.right_eigenvectors(1, 1)) < 1e-14);
  CHECK(s.a_diag.isApproxToConstant(1.0, 1e-13));
  CHECK(s.phase_rigidity.isApproxToConstant(1.0, 1e-13));
}

TEST_CASE("coalesced 2x2 is flagged defective") {
  Eigen::MatrixXcd h(2, 2);
  h << 0.0, 1.0, 1.0, cplx(0.0, -2.0);
  // characteristic polynomial z^2 + 2iz - 1 = (z + i)^2
  const auto s = diagonalize_matrix(h, 0.0);
  CHECK(s.defective);
  CHECK(std::abs(s.eigenvalues(0) - cplx(0.0, -1.0)) < 1e-7);
  CHECK(std::abs(s.eigenvalues(1) - cplx(0.0, -1.0)) < 1e-7);
  CHECK(s.phase_rigidity.maxCoeff() < 1e-6);
}

TEST_CASE("biorthogonal invariants on random models") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 1 + trial % 8;
    const auto m = rl_test::random_wideband(rng, n, 1 + trial % 3);
    const auto s = diagonalize(build_h_eff(m, 0.0));
    REQUIRE_FALSE(s.defective);
    const Eigen::MatrixXcd& phi = s.right_eigenvectors;
    const Eigen::MatrixXcd gram = phi.transpose() * phi;
    CHECK((gram - Eigen::MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((phi * phi.transpose() - Eigen::MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK(s.a_diag.minCoeff() >= 1.0 - 1e-12);
    CHECK(s.phase_rigidity.maxCoeff() <= 1.0 + 1e-12);
    CHECK(s.phase_rigidity.minCoeff() > 0.0);
    for (Eigen::Index l = 0; l < n; ++l) {
      CHECK(s.eigenvalues(l).imag() <= 1e-12);
      CHECK(s.phase_rigidity(l) == doctest::Approx(1.0 / s.a_diag(l)).epsilon(1e-10));
    }
    for (Eigen::Index l = 1; l < n; ++l) {
      const cplx a = s.eigenvalues(l - 1), b = s.eigenvalues(l);
      CHECK((a.real() < b.real() || (a.real() == b.real() && a.imag() <= b.imag())));
    }
  }
}

TEST_CASE("two-level mixing antisymmetry") {
  // holds for N = 2: the single off-diagonal entry is purely imaginary
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const auto s = diagonalize(build_h_eff(rl_test::random_wideband(rng, 2, 1 + trial % 2), 0.0));
    CHECK(std::abs(s.b_matrix(0, 1) + s.b_matrix(1, 0)) <= 1e-10);
  }
}

TEST_CASE("wideband fixed point is immediate") {
  const auto m = rl_test::two_level(-0.3, 0.4, 0.2, 0.1, 1.0);
  const auto st = solve_fixed_point(m, cplx(0.4, 0.0), 1e-12);
  CHECK(st.converged);
  CHECK(st.iterations <= 1);
  CHECK(st.e_lambda == st.z.real());
  CHECK(st.gamma_lambda == doctest::Approx(-2.0 * st.z.imag()));
}

TEST_CASE("flatband fixed point matches a scalar root find") {
  {
    // centred level: the logarithm vanishes at E = 2
    const auto st = solve_fixed_point(flat_level(2.0, 0.05), cplx(2.0, 0.0), 1e-12);
    CHECK(st.converged);
    CHECK(st.e_lambda == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(st.gamma_lambda == doctest::Approx(2.0 * std::numbers::pi * 0.05).epsilon(1e-12));
  }
  {
    const double e = bisect([](double x) { return x - 1.8 - 0.05 * std::log((x - 1.0) / (3.0 - x)); }, 1.2, 2.8);
    const auto st = solve_fixed_point(flat_level(1.8, 0.05), cplx(1.8, 0.0), 1e-12);
    CHECK(st.converged);
    CHECK(std::abs(st.e_lambda - e) <= 1e-10);
    CHECK(std::abs(st.e_lambda - st.z.real()) <= 1e-10);
  }
  {
    // below threshold: bound state, real shift, zero width
    const double e = bisect([](double x) { return x - 0.5 - 0.05 * std::log((1.0 - x) / (3.0 - x)); }, 0.0, 0.99);
    const auto st = solve_fixed_point(flat_level(0.5, 0.05), cplx(0.5, 0.0), 1e-12);
    CHECK(st.converged);
    CHECK(st.gamma_lambda == 0.0);
    CHECK(std::abs(st.e_lambda - e) <= 1e-10);
    CHECK(st.e_lambda < 0.5);
  }
}

TEST_CASE("probe_pair separates the coalescing pair") {
  const double d = 0.25;
  const auto near = rl_test::two_level(-d, d, 0.5 + 1e-4, 0.5 + 1e-4, 1.0 / std::numbers::pi);
  const auto p = probe_pair(near, cplx(0.0, -0.25));
  CHECK(p.separation() < 0.05);
  CHECK(std::max(p.r1, p.r2) < 0.1);
}

}
