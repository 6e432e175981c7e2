#include "resonance_lab/scattering.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "resonance_lab/error.hpp"
#include "resonance_lab/kernels.hpp"
#include "resonance_lab/numerics.hpp"
#include "resonance_lab/parallel.hpp"

namespace resonance_lab {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;
const cplx two_pi_i{0.0, two_pi};

[[noreturn]] void fail(Errc code, const std::string& what) { throw Error("scattering", code, what); }

void require_regular(const ResonanceSpectrum& spectrum) {
  if (spectrum.defective)
    fail(Errc::ep_proximal,
         "spectrum is defective (exceptional point); perturb the energy or parameter slightly");
}

void require_channel(const SystemModel& model, std::size_t channel) {
  if (channel >= model.channel_count()) fail(Errc::invalid_input, "channel index out of range");
}

// Row c: projections phi_l . v_C for every l.
Eigen::MatrixXcd channel_projections(const SystemModel& model, const ResonanceSpectrum& spectrum,
                                     double energy) {
  const auto c_count = static_cast<Eigen::Index>(model.channel_count());
  Eigen::MatrixXcd proj(c_count, static_cast<Eigen::Index>(spectrum.size()));
  for (Eigen::Index c = 0; c < c_count; ++c) {
    const auto v = coupling_vector(model, static_cast<std::size_t>(c), energy);
    proj.row(c) = (v.values.cast<cplx>().transpose() * spectrum.right_eigenvectors);
  }
  return proj;
}

Eigen::MatrixXcd assemble_s_res(const Eigen::MatrixXcd& proj, const Eigen::VectorXcd& z, double energy) {
  const Eigen::VectorXcd inv = (cplx(energy) - z.array()).inverse().matrix();
  return two_pi_i * proj * inv.asDiagonal() * proj.transpose();
}

Eigen::MatrixXcd open_block(const Eigen::MatrixXcd& s_res, const std::vector<std::size_t>& open) {
  const auto n = static_cast<Eigen::Index>(open.size());
  Eigen::MatrixXcd s = Eigen::MatrixXcd::Identity(n, n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b)
      s(a, b) -= s_res(static_cast<Eigen::Index>(open[static_cast<std::size_t>(a)]),
                       static_cast<Eigen::Index>(open[static_cast<std::size_t>(b)]));
  return s;
}

void check_unitary(const Eigen::MatrixXcd& s, double energy) {
  const double resid = unitarity_residual(s);
  if (!(resid <= 1e-6)) {
    std::ostringstream msg;
    msg << "S-matrix unitarity residual " << resid << " at E=" << energy;
    fail(Errc::internal_consistency, msg.str());
  }
}

}  // namespace

std::vector<std::size_t> open_channels(const SystemModel& model, double energy) {
  std::vector<std::size_t> open;
  for (std::size_t c = 0; c < model.channel_count(); ++c)
    if (model.channels()[c].is_open(energy)) open.push_back(c);
  return open;
}

Eigen::MatrixXcd s_matrix_resonant(const SystemModel& model, const ResonanceSpectrum& spectrum, double energy) {
  require_regular(spectrum);
  return assemble_s_res(channel_projections(model, spectrum, energy), spectrum.eigenvalues, energy);
}

Eigen::MatrixXcd s_matrix_full(const SystemModel& model, const ResonanceSpectrum& spectrum, double energy) {
  const Eigen::MatrixXcd s = open_block(s_matrix_resonant(model, spectrum, energy), open_channels(model, energy));
  check_unitary(s, energy);
  return s;
}

double unitarity_residual(const Eigen::MatrixXcd& s) {
  if (s.size() == 0) return 0.0;
  return (s.adjoint() * s - Eigen::MatrixXcd::Identity(s.rows(), s.cols())).norm();
}

double scattering_phase(const Eigen::MatrixXcd& s) {
  if (s.size() == 0) return 0.0;
  return 0.5 * std::arg(s.determinant());
}

InternalWave internal_wave(const SystemModel& model, const ResonanceSpectrum& spectrum, double energy,
                           std::size_t channel) {
  require_channel(model, channel);
  require_regular(spectrum);
  const auto v = coupling_vector(model, channel, energy);
  InternalWave w;
  w.coefficients = (spectrum.right_eigenvectors.transpose() * v.values.cast<cplx>()).array() /
                   (cplx(energy) - spectrum.eigenvalues.array());
  w.psi = spectrum.right_eigenvectors * w.coefficients;
  return w;
}

Eigen::VectorXcd excitation_coefficients(const SystemModel& model, const ResonanceSpectrum& spectrum,
                                         double energy, std::size_t channel) {
  require_channel(model, channel);
  if (!model.channels()[channel].is_open(energy))
    fail(Errc::closed_channel, "channel " + std::to_string(channel) + " is closed at this energy");
  Eigen::VectorXcd c = internal_wave(model, spectrum, energy, channel).coefficients;
  const double norm = c.norm();
  if (norm == 0.0) fail(Errc::undefined_rigidity, "channel does not couple to any resonance state");
  return c / norm;
}

cplx transmission_pole_sum(const SystemModel& model, const ResonanceSpectrum& spectrum, double energy,
                           std::size_t from, std::size_t to) {
  require_channel(model, from);
  require_channel(model, to);
  require_regular(spectrum);
  const auto vf = coupling_vector(model, from, energy);
  const auto vt = coupling_vector(model, to, energy);
  cplx sum = 0.0;
  for (Eigen::Index l = 0; l < spectrum.eigenvalues.size(); ++l) {
    const auto phi = spectrum.right_eigenvectors.col(l);
    const cplx a = (vt.values.cast<cplx>().transpose() * phi)(0);
    const cplx b = (phi.transpose() * vf.values.cast<cplx>())(0);
    sum += a * b / (energy - spectrum.eigenvalues(l));
  }
  return -two_pi_i * sum;
}

cplx transmission_wave(const SystemModel& model, const ResonanceSpectrum& spectrum, double energy,
                       std::size_t from, std::size_t to) {
  require_channel(model, to);
  const auto wave = internal_wave(model, spectrum, energy, from);
  const auto vt = coupling_vector(model, to, energy);
  return -two_pi_i * (vt.values.cast<cplx>().transpose() * wave.psi)(0);
}

cplx transmission(const SystemModel& model, const ResonanceSpectrum& spectrum, double energy,
                  std::size_t from, std::size_t to) {
  require_channel(model, from);
  require_channel(model, to);
  if (from == to) fail(Errc::invalid_input, "transmission needs two different channels");
  for (std::size_t c : {from, to})
    if (!model.channels()[c].is_open(energy))
      fail(Errc::closed_channel, "channel " + std::to_string(c) + " is closed at this energy");

  const cplx t_poles = transmission_pole_sum(model, spectrum, energy, from, to);
  const cplx t_wave = transmission_wave(model, spectrum, energy, from, to);
  const double scale = std::max(std::abs(t_poles), 1e-300);
  if (std::abs(t_poles - t_wave) > 1e-9 * scale) {
    std::ostringstream msg;
    msg << "transmission forms disagree: " << t_poles << " vs " << t_wave;
    fail(Errc::internal_consistency, msg.str());
  }
  return t_poles;
}

WaveRigidity phase_rigidity_vector(const Eigen::VectorXcd& psi) {
  const double norm2 = psi.squaredNorm();
  if (!(norm2 > 0.0)) fail(Errc::undefined_rigidity, "internal wave function is zero");
  const cplx sq = (psi.transpose() * psi)(0);
  return {std::abs(sq) / norm2, -0.5 * std::arg(sq)};
}

WaveRigidity phase_rigidity_psi(const ResonanceSpectrum& spectrum, const Eigen::VectorXcd& c) {
  if (c.size() != static_cast<Eigen::Index>(spectrum.size()))
    fail(Errc::invalid_input, "coefficient vector length does not match the spectrum");
  const double n2 = c.squaredNorm();
  if (n2 == 0.0) fail(Errc::undefined_rigidity, "coefficient vector is zero");
  if (std::abs(n2 - 1.0) > 1e-8) fail(Errc::invalid_input, "coefficients must satisfy sum |c|^2 = 1");
  return phase_rigidity_vector(spectrum.right_eigenvectors * c);
}

ScatteringPoint scattering_point(const SystemModel& model, const ResonanceSpectrum& spectrum, double energy,
                                 std::size_t excite_channel) {
  require_channel(model, excite_channel);
  require_regular(spectrum);
  ScatteringPoint p;
  p.energy = energy;
  p.open = open_channels(model, energy);
  p.s_res = s_matrix_resonant(model, spectrum, energy);
  p.s_full = open_block(p.s_res, p.open);
  p.unitarity = unitarity_residual(p.s_full);
  check_unitary(p.s_full, energy);
  p.phase = scattering_phase(p.s_full);

  const auto c_count = static_cast<Eigen::Index>(model.channel_count());
  p.transmission = Eigen::MatrixXcd::Zero(c_count, c_count);
  for (std::size_t a : p.open)
    for (std::size_t b : p.open)
      if (a != b)
        p.transmission(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
            transmission(model, spectrum, energy, b, a);

  p.rho = std::numeric_limits<double>::quiet_NaN();
  p.theta = std::numeric_limits<double>::quiet_NaN();
  if (model.channels()[excite_channel].is_open(energy)) {
    const auto wave = internal_wave(model, spectrum, energy, excite_channel);
    const double norm = wave.coefficients.norm();
    if (norm > 0.0) {
      p.c_coeffs = wave.coefficients / norm;
      const auto r = phase_rigidity_vector(wave.psi);
      p.rho = r.rho;
      p.theta = r.theta;
    }
  }
  return p;
}

namespace {

// Wideband path: one spectrum, every energy-dependent quantity is a pole sum.
std::vector<ScatteringPoint> scan_constant(const SystemModel& model, std::span<const double> energies,
                                           std::size_t excite) {
  const auto spectrum = diagonalize(build_h_eff(model, 0.0));
  require_regular(spectrum);
  const auto n = static_cast<Eigen::Index>(spectrum.size());
  const auto c_count = static_cast<Eigen::Index>(model.channel_count());
  const Eigen::MatrixXcd proj = channel_projections(model, spectrum, 0.0);
  const std::size_t m = energies.size();

  auto evaluate = [&](auto weight_of) {
    kernels::PoleSet poles;
    for (Eigen::Index l = 0; l < n; ++l) poles.push(weight_of(l), spectrum.eigenvalues(l));
    std::vector<cplx> out(m);
    kernels::pole_sum(poles, energies, out);
    return out;
  };

  std::vector<std::vector<cplx>> s_res(static_cast<std::size_t>(c_count * c_count));
  for (Eigen::Index a = 0; a < c_count; ++a)
    for (Eigen::Index b = a; b < c_count; ++b) {
      s_res[static_cast<std::size_t>(a * c_count + b)] =
          evaluate([&](Eigen::Index l) { return two_pi_i * proj(a, l) * proj(b, l); });
      s_res[static_cast<std::size_t>(b * c_count + a)] = s_res[static_cast<std::size_t>(a * c_count + b)];
    }
  std::vector<std::vector<cplx>> psi(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i)
    psi[static_cast<std::size_t>(i)] = evaluate(
        [&](Eigen::Index l) { return spectrum.right_eigenvectors(i, l) * proj(static_cast<Eigen::Index>(excite), l); });

  std::vector<std::size_t> open(static_cast<std::size_t>(c_count));
  for (std::size_t c = 0; c < open.size(); ++c) open[c] = c;

  std::vector<ScatteringPoint> points(m);
  for (std::size_t j = 0; j < m; ++j) {
    auto& p = points[j];
    p.energy = energies[j];
    p.open = open;
    p.s_res.resize(c_count, c_count);
    for (Eigen::Index a = 0; a < c_count; ++a)
      for (Eigen::Index b = 0; b < c_count; ++b) p.s_res(a, b) = s_res[static_cast<std::size_t>(a * c_count + b)][j];
    p.s_full = Eigen::MatrixXcd::Identity(c_count, c_count) - p.s_res;
    p.unitarity = unitarity_residual(p.s_full);
    check_unitary(p.s_full, p.energy);
    p.phase = scattering_phase(p.s_full);
    p.transmission = -p.s_res;
    p.transmission.diagonal().setZero();

    p.c_coeffs = proj.row(static_cast<Eigen::Index>(excite)).transpose().array() /
                 (cplx(p.energy) - spectrum.eigenvalues.array());
    const double norm = p.c_coeffs.norm();
    Eigen::VectorXcd wave(n);
    for (Eigen::Index i = 0; i < n; ++i) wave(i) = psi[static_cast<std::size_t>(i)][j];
    if (norm > 0.0) {
      p.c_coeffs /= norm;
      const auto r = phase_rigidity_vector(wave);
      p.rho = r.rho;
      p.theta = r.theta;
    } else {
      p.c_coeffs.resize(0);
      p.rho = p.theta = std::numeric_limits<double>::quiet_NaN();
    }
  }
  return points;
}

}  // namespace

std::vector<ScatteringPoint> scan(const SystemModel& model, std::span<const double> energies,
                                  std::size_t excite_channel, unsigned threads) {
  require_channel(model, excite_channel);
  if (energies.empty()) fail(Errc::invalid_input, "energy grid is empty");
  for (double e : energies)
    if (!std::isfinite(e)) fail(Errc::invalid_input, "energy grid must be finite");

  std::vector<ScatteringPoint> points;
  if (model.energy_independent()) {
    points = scan_constant(model, energies, excite_channel);
  } else {
    points.resize(energies.size());
    parallel_for(energies.size(), threads, [&](std::size_t j) {
      const auto spectrum = diagonalize(build_h_eff(model, energies[j]));
      points[j] = scattering_point(model, spectrum, energies[j], excite_channel);
    });
  }

  std::vector<double> phases(points.size());
  for (std::size_t j = 0; j < points.size(); ++j) phases[j] = 2.0 * points[j].phase;
  const auto unwrapped = numerics::unwrap(phases);
  for (std::size_t j = 0; j < points.size(); ++j) points[j].phase = 0.5 * unwrapped[j];
  return points;
}

}  // namespace resonance_lab
