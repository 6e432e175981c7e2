#pragma once

#include <complex>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "resonance_lab/model.hpp"

namespace resonance_lab {

struct DiagonalizeOptions {
  /// |sum_i phi_i^2| below this (for a unit 2-norm eigenvector) marks the
  /// vector as self-orthogonal, i.e. the spectrum sits on an exceptional point.
  double defect_tol = 1e-6;
  /// Accepted ||H phi - z phi|| relative to ||H|| ||phi||.
  double residual_tol = 1e-10;
};

/// Biorthogonal eigendecomposition of a complex symmetric H_eff.
///
/// Right eigenvectors are scaled so that phi^T phi = 1 (bilinear, not
/// conjugated); left eigenvectors are then phi^*. The sign is fixed so that
/// the largest-magnitude component has argument in (-pi/2, pi/2].
struct ResonanceSpectrum {
  double energy = 0.0;
  Eigen::VectorXcd eigenvalues;
  Eigen::MatrixXcd right_eigenvectors;
  Eigen::VectorXd a_diag;            // A = <phi|phi>
  Eigen::MatrixXcd b_matrix;         // <phi_l|phi_m>, diagonal = A
  Eigen::VectorXd phase_rigidity;    // r = |phi^T phi| / <phi|phi>
  std::vector<bool> defective_mask;  // true: vector left unnormalized
  bool defective = false;

  std::size_t size() const { return static_cast<std::size_t>(eigenvalues.size()); }
  double width(std::size_t i) const { return -2.0 * eigenvalues(static_cast<Eigen::Index>(i)).imag(); }
};

/// Eigenpairs ordered by (Re z, Im z). Throws numerical_failure when the
/// solver fails or the residual check does not hold.
ResonanceSpectrum diagonalize(const EffectiveHamiltonian& h, const DiagonalizeOptions& options = {});
ResonanceSpectrum diagonalize_matrix(const Eigen::MatrixXcd& matrix, double energy,
                                     const DiagonalizeOptions& options = {});

/// |v^T v| / v^H v; equals 1/A for a normalized eigenvector and tends to 0 at
/// an exceptional point.
double phase_rigidity_of(const Eigen::VectorXcd& v);

/// |a^T b|, the bilinear overlap used to follow branches.
double bilinear_overlap(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b);

/// Fixed-point consistent resonance: E = Re z(E), Gamma = -2 Im z(E).
struct ResonanceState {
  int branch_id = -1;
  double e_lambda = 0.0;
  double gamma_lambda = 0.0;
  cplx z;  // eigenvalue of H_eff(e_lambda)
  Eigen::VectorXcd eigvec;
  double rigidity = 1.0;
  double a_lambda = 1.0;
  bool defective = false;
  bool converged = false;
  int iterations = 0;

  /// tau = hbar / Gamma with hbar = 1.
  double lifetime() const { return 1.0 / gamma_lambda; }
};

struct FixedPointOptions {
  double tol_fp = 1e-10;
  double damping = 0.5;
  int max_iterations = 200;
  double ambiguity_tol = 1e-6;
  DiagonalizeOptions diagonalize;
};

struct FixedPointSeed {
  cplx z;
  /// Branch vector to follow; empty selects the eigenvalue nearest to z.
  Eigen::VectorXcd vector;
};

/// Damped iteration E <- (1 - a) E + a Re z(E), following the branch by
/// maximal bilinear overlap. Hitting the iteration cap returns
/// converged = false; two overlaps within ambiguity_tol throw branch_ambiguity.
ResonanceState solve_fixed_point(const SystemModel& model, const FixedPointSeed& seed,
                                 const FixedPointOptions& options = {});
ResonanceState solve_fixed_point(const SystemModel& model, cplx seed, double tol_fp);

/// State built directly from eigenpair `index` of a spectrum.
ResonanceState state_from_spectrum(const ResonanceSpectrum& spectrum, std::size_t index);

struct SweepOptions {
  FixedPointOptions fixed_point;
  int max_refinement = 8;
  /// Minimum accepted bilinear overlap between consecutive points of a branch.
  double continuity_min = 0.5;
  /// A tie that survives refinement is treated as an EP crossing only when
  /// the tied states have rigidity below this value.
  double ep_rigidity_gate = 0.5;
  unsigned threads = 1;
};

struct SweepResult {
  SystemModel model;  // base model; re-solved off-grid by the EP/BIC finders
  std::string param;
  std::vector<double> grid;
  /// points[k][b]: state of branch b at grid[k].
  std::vector<std::vector<ResonanceState>> points;
  /// Grid indices k whose incoming step (k-1 -> k) crossed an EP and was
  /// stitched by eigenvalue continuity.
  std::vector<std::size_t> ep_crossings;
  int refinements = 0;

  std::size_t branch_count() const { return points.empty() ? 0 : points.front().size(); }
};

/// Follows every branch across `grid` (strictly monotone, >= 2 points).
SweepResult sweep(const SystemModel& model, const std::string& param, std::span<const double> grid,
                  const SweepOptions& options = {});

struct ExceptionalPoint {
  double param_value = 0.0;
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  cplx energy_value;
  std::pair<int, int> branch_pair;
  double min_separation = 0.0;
  double min_rigidity = 0.0;
  /// min over sign of ||phi_a -/+ i phi_b|| / ||phi_a|| at the refined point.
  double coalescence_deviation = 0.0;
};

/// Two eigenvalues of H_eff near `center`, made fixed-point consistent on
/// their mean energy.
struct PairProbe {
  double energy = 0.0;
  cplx z1, z2;
  double r1 = 1.0, r2 = 1.0;
  Eigen::VectorXcd v1, v2;
  double separation() const { return std::abs(z1 - z2); }
};

PairProbe probe_pair(const SystemModel& model, cplx center, const FixedPointOptions& options = {});

/// Local minima of pairwise |z_a - z_b| refined by golden section inside the
/// bracketing grid interval; kept when the refined separation is below
/// sep_tol and the refined min rigidity is below rig_tol.
std::vector<ExceptionalPoint> find_exceptional_points(const SweepResult& sweep, double sep_tol = 1e-3,
                                                      double rig_tol = 0.1);

}  // namespace resonance_lab
