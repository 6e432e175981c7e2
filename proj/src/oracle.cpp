#include "resonance_lab/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "resonance_lab/error.hpp"
#include "resonance_lab/kernels.hpp"
#include "resonance_lab/numerics.hpp"

namespace resonance_lab {

namespace {

constexpr double pi = std::numbers::pi;

[[noreturn]] void fail(Errc code, const std::string& what) { throw Error("oracle", code, what); }

void flat_bins(double lo, double hi, double dos, std::size_t m, std::vector<double>& w, std::vector<double>& wt) {
  const double dw = (hi - lo) / static_cast<double>(m);
  for (std::size_t k = 0; k < m; ++k) {
    w.push_back(lo + (static_cast<double>(k) + 0.5) * dw);
    wt.push_back(std::sqrt(dos * dw));
  }
}

Eigen::VectorXcd normalized(const Eigen::VectorXcd& init, std::size_t levels) {
  if (init.size() != static_cast<Eigen::Index>(levels)) fail(Errc::invalid_input, "initial state must live on the N levels");
  const double n = init.norm();
  if (!(n > 0.0)) fail(Errc::invalid_input, "initial state is zero");
  return init / n;
}

}  // namespace

double DiscretizedFullSpace::recurrence_time() const { return 2.0 * pi / spacing; }

DiscretizedFullSpace build_full(const SystemModel& model, std::size_t bins,
                                std::optional<std::pair<double, double>> window) {
  if (bins < 100) fail(Errc::invalid_input, "at least 100 bins per channel are required");
  DiscretizedFullSpace f;
  f.levels = model.levels();
  const std::size_t n = f.levels;
  const std::size_t c_count = model.channel_count();
  f.bin_energies.resize(c_count);
  f.bin_weights.resize(c_count);

  for (std::size_t c = 0; c < c_count; ++c) {
    const Channel& ch = model.channels()[c];
    auto& w = f.bin_energies[c];
    auto& wt = f.bin_weights[c];
    switch (ch.kind) {
      case ChannelKind::wideband: {
        if (!window) fail(Errc::invalid_input, "WIDEBAND channel needs a truncation window");
        if (!(window->first < window->second)) fail(Errc::invalid_input, "window must satisfy lo < hi");
        flat_bins(window->first, window->second, ch.dos_scale, bins, w, wt);
        std::ostringstream msg;
        msg << "channel " << c << ": WIDEBAND truncated to [" << window->first << ", " << window->second
            << "]; principal-value shift of the truncation is not zero";
        f.warnings.push_back(msg.str());
        f.spacing = std::max(f.spacing, (window->second - window->first) / static_cast<double>(bins));
        break;
      }
      case ChannelKind::flatband:
        flat_bins(ch.threshold, ch.band_top, ch.dos_scale, bins, w, wt);
        f.spacing = std::max(f.spacing, (ch.band_top - ch.threshold) / static_cast<double>(bins));
        break;
      case ChannelKind::chain_lead: {
        const double t = ch.hopping();
        const double dk = pi / static_cast<double>(bins);
        for (std::size_t j = 0; j < bins; ++j) {
          const double k = (static_cast<double>(j) + 0.5) * dk;
          w.push_back(ch.threshold + 2.0 * t * (1.0 - std::cos(k)));
          wt.push_back(std::sqrt(2.0 / pi * dk) * std::sin(k));
        }
        f.spacing = std::max(f.spacing, 4.0 * t / static_cast<double>(bins));
        break;
      }
    }
  }

  f.dim = n + bins * c_count;
  const auto dim = static_cast<Eigen::Index>(f.dim);
  const auto ni = static_cast<Eigen::Index>(n);
  f.hamiltonian = Eigen::MatrixXd::Zero(dim, dim);
  f.hamiltonian.topLeftCorner(ni, ni) = model.hb();
  for (std::size_t c = 0; c < c_count; ++c) {
    const Eigen::Index off = ni + static_cast<Eigen::Index>(c * bins);
    for (std::size_t k = 0; k < bins; ++k) {
      const auto col = off + static_cast<Eigen::Index>(k);
      f.hamiltonian(col, col) = f.bin_energies[c][k];
      for (Eigen::Index i = 0; i < ni; ++i) {
        const double v = model.couplings()(i, static_cast<Eigen::Index>(c)) * f.bin_weights[c][k];
        f.hamiltonian(i, col) = v;
        f.hamiltonian(col, i) = v;
      }
    }
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(f.hamiltonian);
  if (solver.info() != Eigen::Success) fail(Errc::numerical_failure, "full-space diagonalization did not converge");
  f.eigenvalues = solver.eigenvalues();
  f.level_overlap = solver.eigenvectors().topRows(ni);
  return f;
}

SurvivalTrace survival_probability(const DiscretizedFullSpace& full, const Eigen::VectorXcd& init_in,
                                   std::span<const double> times) {
  const Eigen::VectorXcd init = normalized(init_in, full.levels);
  for (std::size_t j = 0; j < times.size(); ++j)
    if (!std::isfinite(times[j]) || times[j] < 0.0) fail(Errc::invalid_input, "times must be finite and >= 0");

  const auto dim = full.eigenvalues.size();
  const auto n = static_cast<Eigen::Index>(full.levels);
  // p_k = <k|init>
  const Eigen::VectorXcd p = full.level_overlap.transpose().cast<cplx>() * init;
  std::vector<double> freqs(full.eigenvalues.data(), full.eigenvalues.data() + dim);

  SurvivalTrace tr;
  tr.times.assign(times.begin(), times.end());
  const std::size_t m = times.size();
  tr.amplitude.resize(m);
  std::vector<double> weights(static_cast<std::size_t>(dim));
  for (Eigen::Index k = 0; k < dim; ++k) weights[static_cast<std::size_t>(k)] = std::norm(p(k));
  kernels::phase_sum(weights, freqs, times, tr.amplitude);

  // <i|psi(t)> = sum_k U(i,k) p_k e^{-iE_k t}; split the complex weights
  tr.q_population.assign(m, 0.0);
  std::vector<cplx> re_part(m), im_part(m);
  std::vector<double> wr(static_cast<std::size_t>(dim)), wi(static_cast<std::size_t>(dim));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < dim; ++k) {
      const cplx w = full.level_overlap(i, k) * p(k);
      wr[static_cast<std::size_t>(k)] = w.real();
      wi[static_cast<std::size_t>(k)] = w.imag();
    }
    kernels::phase_sum(wr, freqs, times, re_part);
    kernels::phase_sum(wi, freqs, times, im_part);
    for (std::size_t j = 0; j < m; ++j) tr.q_population[j] += std::norm(re_part[j] + cplx(0.0, 1.0) * im_part[j]);
  }

  tr.survival.resize(m);
  for (std::size_t j = 0; j < m; ++j) tr.survival[j] = std::norm(tr.amplitude[j]);
  const double t_max = m ? *std::max_element(times.begin(), times.end()) : 0.0;
  tr.recurrence_warning = t_max > full.recurrence_time();
  return tr;
}

std::vector<double> local_density(const DiscretizedFullSpace& full, const Eigen::VectorXcd& init_in,
                                  std::span<const double> energies, double eta) {
  if (!(eta > 0.0)) fail(Errc::invalid_input, "broadening eta must be > 0");
  const Eigen::VectorXcd init = normalized(init_in, full.levels);
  const Eigen::VectorXcd p = full.level_overlap.transpose().cast<cplx>() * init;
  kernels::PoleSet poles;
  for (Eigen::Index k = 0; k < p.size(); ++k) poles.push(std::norm(p(k)), cplx(full.eigenvalues(k), -eta));
  std::vector<cplx> g(energies.size());
  kernels::pole_sum(poles, energies, g);
  std::vector<double> out(energies.size());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = -g[j].imag() / pi;
  return out;
}

LorentzianFit fit_resonance(const DiscretizedFullSpace& full, const Eigen::VectorXcd& init, double center,
                            double gamma_estimate, std::optional<double> eta_opt) {
  if (!(gamma_estimate > 0.0)) fail(Errc::invalid_input, "gamma estimate must be > 0");
  const double eta = eta_opt.value_or(2.0 * full.spacing);
  const auto xs = numerics::linspace(center - 5.0 * gamma_estimate, center + 5.0 * gamma_estimate, 401);
  const auto ys = local_density(full, init, xs, eta);

  // a * h / pi / ((E - x0)^2 + h^2) with h = w / 2
  auto lorentz = [](double e, const Eigen::VectorXd& p, Eigen::Ref<Eigen::VectorXd> grad) {
    const double a = p(0), x0 = p(1), h = 0.5 * p(2);
    const double d = (e - x0) * (e - x0) + h * h;
    grad(0) = h / (pi * d);
    grad(1) = a * h / pi * 2.0 * (e - x0) / (d * d);
    grad(2) = 0.5 * a / pi * (d - 2.0 * h * h) / (d * d);
    return a * h / (pi * d);
  };
  Eigen::VectorXd p0(3);
  p0 << 1.0, center, gamma_estimate + 2.0 * eta;
  const auto fit = numerics::levenberg_marquardt(lorentz, xs, ys, p0);

  LorentzianFit out;
  out.weight = fit.params(0);
  out.position = fit.params(1);
  out.width = std::abs(fit.params(2)) - 2.0 * eta;
  out.eta = eta;
  out.residual = fit.residual_norm;
  out.converged = fit.converged;
  return out;
}

double lowest_eigenvalue(const DiscretizedFullSpace& full) { return full.eigenvalues(0); }

}  // namespace resonance_lab
