#pragma once

#include <complex>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "resonance_lab/expr.hpp"

namespace resonance_lab {

using cplx = std::complex<double>;

enum class ChannelKind { wideband, flatband, chain_lead };

const char* to_string(ChannelKind kind) noexcept;

/// One decay channel with a closed-form self-energy.
///
/// WIDEBAND: constant density `dos_scale` on the whole real line, always open.
/// FLATBAND: constant density `dos_scale` on [threshold, band_top].
/// CHAIN_LEAD: semi-infinite tight-binding lead; `dos_scale` is the lead
/// hopping t and the band is [threshold, threshold + 4t].
struct Channel {
  ChannelKind kind = ChannelKind::wideband;
  double threshold = -std::numeric_limits<double>::infinity();
  double band_top = std::numeric_limits<double>::infinity();
  double dos_scale = 1.0;

  static Channel wideband(double dos_scale);
  static Channel flatband(double lower, double upper, double dos_scale);
  static Channel chain_lead(double threshold, double hopping);

  bool is_open(double energy) const;
  double hopping() const { return dos_scale; }
};

struct HbEntry {
  std::size_t row = 0;
  std::size_t col = 0;
  Expr value;
};

struct ChannelSpec {
  ChannelKind kind = ChannelKind::wideband;
  Expr threshold;  // ignored for WIDEBAND
  Expr band_top;   // FLATBAND only
  Expr dos_scale;  // density scale, or lead hopping for CHAIN_LEAD
  std::vector<Expr> coupling;  // length N
};

/// Parametric description of a system. Every numeric field may reference
/// control parameters; SystemModel evaluates it.
struct ModelSpec {
  std::size_t levels = 0;
  std::vector<HbEntry> hb;  // one entry per unordered pair, mirrored on build
  std::vector<ChannelSpec> channels;
  ParamMap params;
};

/// Closed system H_B plus channels and couplings, evaluated at the current
/// control-parameter values. Immutable; with_param() returns a new model.
class SystemModel {
 public:
  explicit SystemModel(ModelSpec spec);

  /// Constant model; couplings is N x C.
  static SystemModel from_values(const Eigen::MatrixXd& hb, std::vector<Channel> channels,
                                 const Eigen::MatrixXd& couplings);

  SystemModel with_param(const std::string& name, double value) const;
  SystemModel with_params(const ParamMap& values) const;

  std::size_t levels() const { return static_cast<std::size_t>(hb_.rows()); }
  std::size_t channel_count() const { return channels_.size(); }
  const Eigen::MatrixXd& hb() const { return hb_; }
  const std::vector<Channel>& channels() const { return channels_; }
  /// N x C matrix of coupling strengths gamma.
  const Eigen::MatrixXd& couplings() const { return couplings_; }
  const ParamMap& control_params() const { return spec_->params; }
  const ModelSpec& spec() const { return *spec_; }

  /// True when H_eff does not depend on E (every channel WIDEBAND).
  bool energy_independent() const;

 private:
  std::shared_ptr<const ModelSpec> spec_;
  Eigen::MatrixXd hb_;
  std::vector<Channel> channels_;
  Eigen::MatrixXd couplings_;
};

struct EffectiveHamiltonian {
  double energy = 0.0;
  Eigen::MatrixXcd matrix;              // hermitian_part - i*pi*antihermitian_part
  Eigen::MatrixXd hermitian_part;       // H_B + principal-value shift
  Eigen::MatrixXd antihermitian_part;   // W(E) = sum over open channels of v v^T
  std::vector<bool> open_channel_mask;
};

/// H_eff(E) = H_B + sum_C gamma_C gamma_C^T sigma_C(E).
/// Throws invalid_input for non-finite E, singular_self_energy when E sits
/// exactly on a FLATBAND edge.
EffectiveHamiltonian build_h_eff(const SystemModel& model, double energy);

/// Scalar self-energy sigma_C(E) per unit gamma gamma^T.
cplx channel_self_energy(const Channel& channel, double energy);

/// Spectral density of the channel at E (zero outside the band).
double channel_density(const Channel& channel, double energy);

struct CouplingVector {
  Eigen::VectorXd values;  // <xi_C^E|V|level i>
  bool open = false;       // false: evanescent, values are zero
};

/// Coupling column sqrt(density(E)) * gamma_C. Zero and open=false when the
/// channel is closed at E.
CouplingVector coupling_vector(const SystemModel& model, std::size_t channel, double energy);

}  // namespace resonance_lab
