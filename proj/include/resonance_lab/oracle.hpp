#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "resonance_lab/model.hpp"

namespace resonance_lab {

/// Hermitian Friedrichs Hamiltonian on the N levels plus M discrete continuum
/// bins per channel:
///   [ H_B   V      ]
///   [ V^T   diag(w)]
/// with V(i, k) = gamma_iC * bin_weight_k. Diagonalized on construction.
struct DiscretizedFullSpace {
  std::size_t levels = 0;
  std::size_t dim = 0;
  Eigen::MatrixXd hamiltonian;
  std::vector<std::vector<double>> bin_energies;  // per channel, increasing
  std::vector<std::vector<double>> bin_weights;   // sqrt(rho(w_k) dw_k)
  double spacing = 0.0;                           // largest mean bin spacing over the channels
  std::vector<std::string> warnings;

  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXd level_overlap;  // N x dim, <level i|k>

  /// Time after which the discrete continuum recurs, 2 pi / spacing.
  double recurrence_time() const;
};

/// FLATBAND: uniform bins in w. CHAIN_LEAD: uniform bins in lead momentum,
/// w(k) = w0 + 2t(1 - cos k). WIDEBAND needs a window [lo, hi] and is then
/// treated as a flat band on it (recorded in warnings). bins >= 100.
DiscretizedFullSpace build_full(const SystemModel& model, std::size_t bins_per_channel,
                                std::optional<std::pair<double, double>> window = std::nullopt);

struct SurvivalTrace {
  std::vector<double> times;
  std::vector<std::complex<double>> amplitude;  // <init|exp(-iHt)|init>
  std::vector<double> survival;                 // |amplitude|^2
  std::vector<double> q_population;             // weight left on the N levels
  bool recurrence_warning = false;
};

/// Exact evolution of `init` (normalized internally) through the stored
/// eigendecomposition.
SurvivalTrace survival_probability(const DiscretizedFullSpace& full, const Eigen::VectorXcd& init,
                                   std::span<const double> times);

/// Local density of states of `init`, broadened by eta: A(E) = sum_k |<init|k>|^2 L_eta(E - E_k).
std::vector<double> local_density(const DiscretizedFullSpace& full, const Eigen::VectorXcd& init,
                                  std::span<const double> energies, double eta);

struct LorentzianFit {
  double position = 0.0;
  double width = 0.0;    // FWHM with the eta broadening removed
  double weight = 0.0;
  double eta = 0.0;
  double residual = 0.0;
  bool converged = false;
};

/// Fits a Lorentzian to the broadened LDOS over center +- 5 gamma_estimate.
/// eta defaults to 2 spacing.
LorentzianFit fit_resonance(const DiscretizedFullSpace& full, const Eigen::VectorXcd& init, double center,
                            double gamma_estimate, std::optional<double> eta = std::nullopt);

/// Lowest eigenvalue of the full Hamiltonian, i.e. a bound state below every
/// threshold when one exists.
double lowest_eigenvalue(const DiscretizedFullSpace& full);

}  // namespace resonance_lab
