#include "resonance_lab/model.hpp"

#include <cmath>
#include <numbers>

#include "resonance_lab/error.hpp"

namespace resonance_lab {

namespace {

[[noreturn]] void invalid(const std::string& what) {
  throw Error("model", Errc::invalid_input, what);
}

Channel evaluate_channel(const ChannelSpec& spec, const ParamMap& params) {
  switch (spec.kind) {
    case ChannelKind::wideband:
      return Channel::wideband(spec.dos_scale.evaluate(params));
    case ChannelKind::flatband:
      return Channel::flatband(spec.threshold.evaluate(params), spec.band_top.evaluate(params),
                               spec.dos_scale.evaluate(params));
    case ChannelKind::chain_lead:
      return Channel::chain_lead(spec.threshold.evaluate(params), spec.dos_scale.evaluate(params));
  }
  invalid("unknown channel kind");
}

}  // namespace

const char* to_string(ChannelKind kind) noexcept {
  switch (kind) {
    case ChannelKind::wideband: return "wideband";
    case ChannelKind::flatband: return "flatband";
    case ChannelKind::chain_lead: return "chain_lead";
  }
  return "unknown";
}

Channel Channel::wideband(double dos_scale) {
  if (!(dos_scale > 0.0) || !std::isfinite(dos_scale)) invalid("wideband dos_scale must be > 0");
  Channel c;
  c.kind = ChannelKind::wideband;
  c.dos_scale = dos_scale;
  return c;
}

Channel Channel::flatband(double lower, double upper, double dos_scale) {
  if (!std::isfinite(lower) || !std::isfinite(upper)) invalid("flatband edges must be finite");
  if (!(lower < upper)) invalid("flatband requires threshold < band_top");
  if (!(dos_scale > 0.0) || !std::isfinite(dos_scale)) invalid("flatband dos_scale must be > 0");
  Channel c;
  c.kind = ChannelKind::flatband;
  c.threshold = lower;
  c.band_top = upper;
  c.dos_scale = dos_scale;
  return c;
}

Channel Channel::chain_lead(double threshold, double hopping) {
  if (!std::isfinite(threshold)) invalid("chain_lead threshold must be finite");
  if (!(hopping > 0.0) || !std::isfinite(hopping)) invalid("chain_lead hopping must be > 0");
  Channel c;
  c.kind = ChannelKind::chain_lead;
  c.threshold = threshold;
  c.band_top = threshold + 4.0 * hopping;
  c.dos_scale = hopping;
  return c;
}

bool Channel::is_open(double energy) const {
  if (kind == ChannelKind::wideband) return true;
  return threshold < energy && energy < band_top;
}

SystemModel::SystemModel(ModelSpec spec) : spec_(std::make_shared<const ModelSpec>(std::move(spec))) {
  const auto& s = *spec_;
  const auto n = s.levels;
  if (n == 0) invalid("at least one level is required");
  if (s.channels.empty()) invalid("at least one channel is required");

  hb_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  std::vector<bool> seen(n * n, false);
  for (const auto& e : s.hb) {
    if (e.row >= n || e.col >= n) invalid("H_B entry index out of range");
    const auto lo = std::min(e.row, e.col), hi = std::max(e.row, e.col);
    if (seen[lo * n + hi]) invalid("duplicate H_B entry (" + std::to_string(lo) + "," + std::to_string(hi) + ")");
    seen[lo * n + hi] = true;
    const double v = e.value.evaluate(s.params);
    if (!std::isfinite(v)) invalid("non-finite H_B entry");
    hb_(static_cast<Eigen::Index>(e.row), static_cast<Eigen::Index>(e.col)) = v;
    hb_(static_cast<Eigen::Index>(e.col), static_cast<Eigen::Index>(e.row)) = v;
  }

  const auto c_count = s.channels.size();
  couplings_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(c_count));
  channels_.reserve(c_count);
  for (std::size_t c = 0; c < c_count; ++c) {
    const auto& cs = s.channels[c];
    channels_.push_back(evaluate_channel(cs, s.params));
    if (cs.coupling.size() != n)
      invalid("channel " + std::to_string(c) + " coupling has " + std::to_string(cs.coupling.size()) +
              " entries, expected " + std::to_string(n));
    for (std::size_t i = 0; i < n; ++i) {
      const double g = cs.coupling[i].evaluate(s.params);
      if (!std::isfinite(g)) invalid("non-finite coupling");
      couplings_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = g;
    }
  }
}

SystemModel SystemModel::from_values(const Eigen::MatrixXd& hb, std::vector<Channel> channels,
                                     const Eigen::MatrixXd& couplings) {
  if (hb.rows() != hb.cols()) invalid("H_B must be square");
  if (couplings.rows() != hb.rows() || couplings.cols() != static_cast<Eigen::Index>(channels.size()))
    invalid("couplings must be N x C");
  for (Eigen::Index i = 0; i < hb.rows(); ++i)
    for (Eigen::Index j = i + 1; j < hb.cols(); ++j)
      if (hb(i, j) != hb(j, i)) invalid("H_B must be exactly symmetric");

  ModelSpec spec;
  spec.levels = static_cast<std::size_t>(hb.rows());
  for (Eigen::Index i = 0; i < hb.rows(); ++i)
    for (Eigen::Index j = i; j < hb.cols(); ++j)
      if (i == j || hb(i, j) != 0.0)
        spec.hb.push_back({static_cast<std::size_t>(i), static_cast<std::size_t>(j), Expr(hb(i, j))});
  for (std::size_t c = 0; c < channels.size(); ++c) {
    ChannelSpec cs;
    cs.kind = channels[c].kind;
    cs.threshold = Expr(channels[c].kind == ChannelKind::wideband ? 0.0 : channels[c].threshold);
    cs.band_top = Expr(channels[c].kind == ChannelKind::flatband ? channels[c].band_top : 0.0);
    cs.dos_scale = Expr(channels[c].dos_scale);
    for (Eigen::Index i = 0; i < couplings.rows(); ++i)
      cs.coupling.emplace_back(couplings(i, static_cast<Eigen::Index>(c)));
    spec.channels.push_back(std::move(cs));
  }
  return SystemModel(std::move(spec));
}

SystemModel SystemModel::with_param(const std::string& name, double value) const {
  if (!spec_->params.contains(name)) invalid("undeclared control parameter '" + name + "'");
  ModelSpec next = *spec_;
  next.params[name] = value;
  return SystemModel(std::move(next));
}

SystemModel SystemModel::with_params(const ParamMap& values) const {
  ModelSpec next = *spec_;
  for (const auto& [name, value] : values) {
    if (!next.params.contains(name)) invalid("undeclared control parameter '" + name + "'");
    next.params[name] = value;
  }
  return SystemModel(std::move(next));
}

bool SystemModel::energy_independent() const {
  for (const auto& c : channels_)
    if (c.kind != ChannelKind::wideband) return false;
  return true;
}

cplx channel_self_energy(const Channel& channel, double energy) {
  constexpr double pi = std::numbers::pi;
  switch (channel.kind) {
    case ChannelKind::wideband:
      return {0.0, -pi * channel.dos_scale};
    case ChannelKind::flatband: {
      const double a = channel.threshold, b = channel.band_top;
      if (energy == a || energy == b)
        throw Error("model", Errc::singular_self_energy,
                    "energy " + std::to_string(energy) + " lies on a flatband edge");
      // P.V. integral of dos/(E - w) over [a, b]
      const double pv = channel.dos_scale * std::log(std::abs((energy - a) / (energy - b)));
      const double im = channel.is_open(energy) ? -pi * channel.dos_scale : 0.0;
      return {pv, im};
    }
    case ChannelKind::chain_lead: {
      const double t = channel.dos_scale;
      const double eps = energy - channel.threshold - 2.0 * t;
      const double t2 = 2.0 * t * t;
      if (std::abs(eps) < 2.0 * t) return {eps / t2, -std::sqrt(4.0 * t * t - eps * eps) / t2};
      // decaying root outside the band
      const double root = std::sqrt(eps * eps - 4.0 * t * t);
      return {(eps - std::copysign(root, eps)) / t2, 0.0};
    }
  }
  return {};
}

double channel_density(const Channel& channel, double energy) {
  if (!channel.is_open(energy)) return 0.0;
  return -channel_self_energy(channel, energy).imag() / std::numbers::pi;
}

EffectiveHamiltonian build_h_eff(const SystemModel& model, double energy) {
  if (!std::isfinite(energy)) invalid("energy must be finite");
  const auto n = static_cast<Eigen::Index>(model.levels());

  EffectiveHamiltonian h;
  h.energy = energy;
  h.hermitian_part = model.hb();
  h.antihermitian_part = Eigen::MatrixXd::Zero(n, n);
  h.open_channel_mask.resize(model.channel_count());

  for (std::size_t c = 0; c < model.channel_count(); ++c) {
    const auto& ch = model.channels()[c];
    const Eigen::VectorXd gamma = model.couplings().col(static_cast<Eigen::Index>(c));
    const Eigen::MatrixXd outer = gamma * gamma.transpose();
    const cplx sigma = channel_self_energy(ch, energy);
    h.open_channel_mask[c] = ch.is_open(energy);
    if (sigma.real() != 0.0) h.hermitian_part += sigma.real() * outer;
    if (h.open_channel_mask[c]) h.antihermitian_part += (-sigma.imag() / std::numbers::pi) * outer;
  }

  h.matrix = h.hermitian_part.cast<cplx>() -
             cplx(0.0, std::numbers::pi) * h.antihermitian_part.cast<cplx>();
  return h;
}

CouplingVector coupling_vector(const SystemModel& model, std::size_t channel, double energy) {
  if (channel >= model.channel_count()) invalid("channel index out of range");
  if (!std::isfinite(energy)) invalid("energy must be finite");
  const auto& ch = model.channels()[channel];
  CouplingVector out;
  out.open = ch.is_open(energy);
  if (!out.open) {
    out.values = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model.levels()));
    return out;
  }
  out.values = std::sqrt(channel_density(ch, energy)) * model.couplings().col(static_cast<Eigen::Index>(channel));
  return out;
}

}  // namespace resonance_lab
