#pragma once

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "resonance_lab/model.hpp"

namespace rl_test {

using resonance_lab::Channel;
using resonance_lab::SystemModel;

inline SystemModel two_level(double e1, double e2, double g1, double g2, double dos) {
  Eigen::MatrixXd hb = Eigen::MatrixXd::Zero(2, 2);
  hb(0, 0) = e1;
  hb(1, 1) = e2;
  Eigen::MatrixXd v(2, 1);
  v << g1, g2;
  return SystemModel::from_values(hb, {Channel::wideband(dos)}, v);
}

// Symmetric H_B and wideband channels with random couplings.
inline SystemModel random_wideband(std::mt19937_64& rng, int n, int c, double coupling_scale = 0.5) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXd hb(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) hb(i, j) = hb(j, i) = (i == j ? 2.0 : 0.3) * u(rng);
  Eigen::MatrixXd v(n, c);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < c; ++k) v(i, k) = coupling_scale * u(rng);
  std::vector<Channel> ch;
  for (int k = 0; k < c; ++k) ch.push_back(Channel::wideband(0.5 + 0.5 * std::abs(u(rng))));
  return SystemModel::from_values(hb, ch, v);
}

}  // namespace rl_test
