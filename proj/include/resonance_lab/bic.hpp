#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "resonance_lab/model.hpp"
#include "resonance_lab/spectral.hpp"

namespace resonance_lab {

struct BicCandidate {
  std::string param;
  double param_value = 0.0;     // X0, refined minimum of Gamma
  double energy = 0.0;          // E at the fixed point
  double width_at_min = 0.0;
  int branch_id = -1;
  int partner_branch = -1;      // widest other branch at X0
  double partner_width = 0.0;
  cplx z;
  Eigen::VectorXcd eigvec;
  std::vector<double> decoupling_residuals;  // |v_C . phi| per channel
  bool true_bic = false;        // width_at_min < width_tol
  /// Gamma <= 2 pi sum_C |v_C . phi|^2 + 1e-10 at every grid point of the branch.
  bool width_inequality = true;
  double width_inequality_slack = 0.0;  // min of rhs - Gamma over the branch
  std::string coupling_pattern;         // uniform | mirror | asymmetric
};

/// Local minima of Gamma per branch, refined by golden section. Points where
/// no channel carries coupling are skipped.
std::vector<BicCandidate> find_bics(const SweepResult& sweep, double width_tol = 1e-10);

struct BicCheck {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double threshold = 0.0;
  std::string detail;
};

struct BicReport {
  std::vector<BicCheck> checks;
  /// Phase change across the near-BIC resonance used in the S-matrix check.
  double phase_jump = 0.0;
  double near_param = 0.0;
  double near_width = 0.0;

  bool passed() const;
};

/// Decoupling, form-factor sum in the H_B eigenbasis, S-matrix regularity with
/// the pi phase jump of the nearby quasi-bound state, and constant population.
/// Failed checks are reported, not thrown.
BicReport verify_bic(const BicCandidate& candidate, const SystemModel& model);

/// "uniform" when every coupling column is constant, "mirror" when every
/// column reads the same reversed, otherwise "asymmetric".
std::string coupling_pattern(const Eigen::MatrixXd& couplings);

}  // namespace resonance_lab
