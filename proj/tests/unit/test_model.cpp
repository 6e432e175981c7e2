#include <cmath>
#include <numbers>

#include "doctest.h"
#include "resonance_lab/error.hpp"
#include "resonance_lab/model.hpp"
#include "support.hpp"

using namespace resonance_lab;

TEST_SUITE("model") {

TEST_CASE("zero coupling leaves H_B untouched") {
  Eigen::MatrixXd hb(1, 1);
  hb << 0.7;
  const auto m = SystemModel::from_values(hb, {Channel::wideband(1.0)}, Eigen::MatrixXd::Zero(1, 1));
  const auto h = build_h_eff(m, 0.3);
  CHECK(h.matrix(0, 0) == cplx(0.7, 0.0));
  CHECK(h.antihermitian_part(0, 0) == 0.0);
}

TEST_CASE("wideband closed form") {
  const auto m = rl_test::two_level(0.0, 0.0, 1.0, 1.0, 1.0 / std::numbers::pi);
  const auto h = build_h_eff(m, 5.0);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) CHECK(std::abs(h.matrix(i, j) - cplx(0.0, -1.0)) < 1e-15);
}

TEST_CASE("flatband principal value below the band") {
  // midpoint quadrature of the integral of 0.1/(0 - w) over [1, 3]
  double quad = 0.0;
  const int steps = 200000;
  for (int k = 0; k < steps; ++k) {
    const double w = 1.0 + (k + 0.5) * 2.0 / steps;
    quad += 0.1 / (0.0 - w) * 2.0 / steps;
  }
  CHECK(quad == doctest::Approx(-0.1098612).epsilon(1e-6));

  Eigen::MatrixXd hb = Eigen::MatrixXd::Zero(1, 1);
  Eigen::MatrixXd v(1, 1);
  v << std::sqrt(0.1);
  const auto m = SystemModel::from_values(hb, {Channel::flatband(1.0, 3.0, 1.0)}, v);
  const auto h = build_h_eff(m, 0.0);
  CHECK(h.hermitian_part(0, 0) == doctest::Approx(quad).epsilon(1e-8));
  CHECK(h.antihermitian_part(0, 0) == 0.0);
  CHECK_FALSE(h.open_channel_mask[0]);
}

TEST_CASE("flatband inside the band adds the residue") {
  const Channel ch = Channel::flatband(-1.0, 1.0, 0.5);
  const cplx s = channel_self_energy(ch, 0.25);
  CHECK(s.imag() == doctest::Approx(-std::numbers::pi * 0.5));
  CHECK(s.real() == doctest::Approx(0.5 * std::log(1.25 / 0.75)));
  CHECK_THROWS_AS(channel_self_energy(ch, 1.0), Error);
}

TEST_CASE("chain lead density peaks at the band centre") {
  const double t = 0.7;
  const Channel ch = Channel::chain_lead(-0.4, t);
  const double centre = -0.4 + 2.0 * t;
  CHECK(channel_density(ch, centre) == doctest::Approx(1.0 / (std::numbers::pi * t)).epsilon(1e-14));
  CHECK(channel_density(ch, centre + 0.3) < channel_density(ch, centre));
  CHECK(channel_density(ch, -0.5) == 0.0);
  // outside the band the self-energy is real and decays
  const cplx below = channel_self_energy(ch, -1.0);
  CHECK(below.imag() == 0.0);
  CHECK(std::abs(below) <= 1.0 / t);
}

TEST_CASE("coupling vector scales with the density") {
  Eigen::MatrixXd hb = Eigen::MatrixXd::Zero(2, 2);
  Eigen::MatrixXd v(2, 1);
  v << 1.0, 0.0;
  const auto m = SystemModel::from_values(hb, {Channel::wideband(1.0 / std::numbers::pi)}, v);
  const auto cv = coupling_vector(m, 0, 0.0);
  CHECK(cv.open);
  CHECK(cv.values(0) == doctest::Approx(1.0 / std::sqrt(std::numbers::pi)));
  CHECK(cv.values(1) == 0.0);

  const auto closed = SystemModel::from_values(hb, {Channel::flatband(1.0, 2.0, 1.0)}, v);
  const auto cc = coupling_vector(closed, 0, 0.0);
  CHECK_FALSE(cc.open);
  CHECK(cc.values.isZero(0.0));
}

TEST_CASE("H_eff invariants on random models") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto m = rl_test::random_wideband(rng, 2 + trial % 5, 1 + trial % 3);
    const auto h = build_h_eff(m, 0.1 * trial);
    CHECK(h.matrix == h.matrix.transpose());
    const Eigen::MatrixXcd rebuilt =
        h.hermitian_part.cast<cplx>() - cplx(0.0, std::numbers::pi) * h.antihermitian_part.cast<cplx>();
    CHECK((h.matrix - rebuilt).norm() <= 1e-14 * h.matrix.norm());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h.antihermitian_part);
    CHECK(es.eigenvalues().minCoeff() >= -1e-14);
  }
}

TEST_CASE("model construction rejects bad input") {
  Eigen::MatrixXd hb(2, 2);
  hb << 0.0, 1.0, 0.5, 0.0;
  CHECK_THROWS_AS(SystemModel::from_values(hb, {Channel::wideband(1.0)}, Eigen::MatrixXd::Zero(2, 1)), Error);
  Eigen::MatrixXd ok = Eigen::MatrixXd::Zero(2, 2);
  CHECK_THROWS_AS(SystemModel::from_values(ok, {Channel::wideband(1.0)}, Eigen::MatrixXd::Zero(3, 1)), Error);
  CHECK_THROWS_AS(SystemModel::from_values(ok, {Channel::flatband(2.0, 1.0, 1.0)}, Eigen::MatrixXd::Zero(2, 1)),
                  Error);
  CHECK_THROWS_AS(SystemModel::from_values(ok, {}, Eigen::MatrixXd::Zero(2, 0)), Error);
}

}
