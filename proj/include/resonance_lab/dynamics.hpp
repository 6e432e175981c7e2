#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "resonance_lab/model.hpp"
#include "resonance_lab/spectral.hpp"

namespace resonance_lab {

/// Time evolution of an internal state under a fixed H_eff(E), hbar = 1.
struct DecayTrace {
  double energy = 0.0;
  std::vector<double> times;
  /// sum_l c_l d_l exp(-Gamma_l t) with d = c*.
  std::vector<cplx> population;
  /// ||exp(-i H_eff t) Psi(0)||^2, which keeps the <phi_l|phi_l'> cross terms.
  std::vector<double> q_norm;
  std::vector<double> rate_analytic;  // sum Gamma w e^{-Gamma t} / sum w e^{-Gamma t}
  std::vector<double> rate_numeric;   // -d/dt ln|population| by finite differences
  Eigen::VectorXcd c0;
  Eigen::VectorXcd d;
  std::vector<double> gammas;
  /// Max relative difference between the two rates at interior samples
  /// (two away from either end) where population > 1e-250.
  double rate_agreement = 0.0;
  /// Population fell below 1e-300; the trace stops at the last valid time.
  bool truncated = false;
};

/// Throws ep_proximal for a defective spectrum and invalid_input when times do
/// not start at 0 or are not strictly increasing.
DecayTrace evolve(const ResonanceSpectrum& spectrum, double energy, const Eigen::VectorXcd& c0,
                  std::span<const double> times);

/// Returns trace.rate_analytic; recomputes both rates and the agreement.
std::vector<double> decay_rate(DecayTrace& trace);

/// Two-term crossover time at which k_gr(t) = (Gamma_1 + Gamma_2) / 2:
/// t* = ln(w_1 / w_2) / (Gamma_1 - Gamma_2).
double crossover_time(double w1, double gamma1, double w2, double gamma2);

struct SaturationRow {
  double g = 0.0;
  double gamma_av = 0.0;  // mean width of the N-1 trapped states
  double k_av = 0.0;      // = gamma_av
  double tau_av = 0.0;    // = 1 / k_av
  double gamma_max = 0.0; // width of the state that collects the coupling
};

/// k_av of the trapped states for one WIDEBAND channel and N >= 3, sweeping
/// the control parameter `param` over g_grid.
std::vector<SaturationRow> average_rate_saturation(const SystemModel& model, std::span<const double> g_grid,
                                                   const std::string& param = "g");

}  // namespace resonance_lab
