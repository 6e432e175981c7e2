#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "resonance_lab/model.hpp"
#include "resonance_lab/spectral.hpp"

namespace resonance_lab {

/// Resonance part of the S-matrix on all C channels:
///   S^res_{C'C} = 2 pi i sum_l (v_C' . phi_l)(phi_l . v_C) / (E - z_l)
/// with v_C = coupling_vector(model, C, E). Closed channels give zero rows and
/// columns. Throws ep_proximal for a defective spectrum.
Eigen::MatrixXcd s_matrix_resonant(const SystemModel& model, const ResonanceSpectrum& spectrum, double energy);

/// Indices of the channels open at E, ascending.
std::vector<std::size_t> open_channels(const SystemModel& model, double energy);

/// Unitary S = I - S^res restricted to the open channels (order of
/// open_channels). Throws internal_consistency when ||S^H S - I|| > 1e-6.
Eigen::MatrixXcd s_matrix_full(const SystemModel& model, const ResonanceSpectrum& spectrum, double energy);

/// Frobenius norm of S^H S - I.
double unitarity_residual(const Eigen::MatrixXcd& s);

/// 0.5 * arg det S.
double scattering_phase(const Eigen::MatrixXcd& s);

/// Psi-hat = sum_l c_l phi_l with c_l = (phi_l . v_C) / (E - z_l), unnormalized.
struct InternalWave {
  Eigen::VectorXcd coefficients;  // c_l
  Eigen::VectorXcd psi;           // Psi-hat on the N levels
};

InternalWave internal_wave(const SystemModel& model, const ResonanceSpectrum& spectrum, double energy,
                           std::size_t channel);

/// c_l of the scattering excitation from `channel`, normalized to sum |c|^2 = 1.
/// Throws closed_channel when the channel is closed at E.
Eigen::VectorXcd excitation_coefficients(const SystemModel& model, const ResonanceSpectrum& spectrum,
                                         double energy, std::size_t channel);

/// t = -2 pi i sum_l (v_to . phi_l)(phi_l . v_from) / (E - z_l).
cplx transmission_pole_sum(const SystemModel& model, const ResonanceSpectrum& spectrum, double energy,
                           std::size_t from, std::size_t to);
/// t = -2 pi i v_to . Psi-hat, Psi-hat excited from `from`.
cplx transmission_wave(const SystemModel& model, const ResonanceSpectrum& spectrum, double energy,
                       std::size_t from, std::size_t to);

/// Both forms; throws internal_consistency if they differ by more than 1e-9
/// relative (absolute below |t| = 1e-300). Closed or equal channels throw.
cplx transmission(const SystemModel& model, const ResonanceSpectrum& spectrum, double energy,
                  std::size_t from, std::size_t to);

struct WaveRigidity {
  double rho = 1.0;
  double theta = 0.0;
};

/// rho = |sum Psi_i^2| / sum |Psi_i|^2 and theta = -arg(sum Psi_i^2) / 2 for
/// Psi = sum_l c_l phi_l. c must satisfy sum |c|^2 = 1 (1e-8). Throws
/// undefined_rigidity when Psi vanishes.
WaveRigidity phase_rigidity_psi(const ResonanceSpectrum& spectrum, const Eigen::VectorXcd& c);

/// rho and theta of an explicit internal vector.
WaveRigidity phase_rigidity_vector(const Eigen::VectorXcd& psi);

struct ScatteringPoint {
  double energy = 0.0;
  std::vector<std::size_t> open;   // channel indices of the s_full block
  Eigen::MatrixXcd s_res;          // C x C
  Eigen::MatrixXcd s_full;         // open x open
  Eigen::MatrixXcd transmission;   // C x C, t(to, from); zero on the diagonal and closed entries
  double rho = 0.0;                // NaN when the excitation channel is closed
  double theta = 0.0;
  Eigen::VectorXcd c_coeffs;       // normalized, empty when closed
  double phase = 0.0;              // 0.5 arg det S, unwrapped along a scan
  double unitarity = 0.0;
};

/// Every observable at one energy; the spectrum must be H_eff(energy)'s.
ScatteringPoint scattering_point(const SystemModel& model, const ResonanceSpectrum& spectrum, double energy,
                                 std::size_t excite_channel = 0);

/// Scattering observables over an energy grid. Energy-independent models are
/// diagonalized once and evaluated with the pole-sum kernel; otherwise each
/// energy gets its own H_eff. Phases are unwrapped along the grid. Result is
/// independent of `threads`.
std::vector<ScatteringPoint> scan(const SystemModel& model, std::span<const double> energies,
                                  std::size_t excite_channel = 0, unsigned threads = 1);

}  // namespace resonance_lab
