#include "resonance_lab/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "resonance_lab/error.hpp"

namespace resonance_lab {

namespace {

[[noreturn]] void fail(Errc code, const std::string& what) { throw Error("dynamics", code, what); }

// -d/dt ln y. Five-point centred stencil where the five samples are evenly
// spaced, three-point (non-uniform) stencils elsewhere and one-sided ones at
// the ends.
std::vector<double> log_derivative(std::span<const double> t, std::span<const double> y) {
  const std::size_t n = t.size();
  std::vector<double> out(n, std::numeric_limits<double>::quiet_NaN());
  if (n < 2) return out;
  std::vector<double> ly(n);
  for (std::size_t i = 0; i < n; ++i) ly[i] = std::log(y[i]);
  if (n == 2) {
    out[0] = out[1] = -(ly[1] - ly[0]) / (t[1] - t[0]);
    return out;
  }
  auto three_point = [&](std::size_t i0, double at) {
    // derivative at `at` of the quadratic through points i0..i0+2
    const double x0 = t[i0], x1 = t[i0 + 1], x2 = t[i0 + 2];
    const double d0 = (2 * at - x1 - x2) / ((x0 - x1) * (x0 - x2));
    const double d1 = (2 * at - x0 - x2) / ((x1 - x0) * (x1 - x2));
    const double d2 = (2 * at - x0 - x1) / ((x2 - x0) * (x2 - x1));
    return -(d0 * ly[i0] + d1 * ly[i0 + 1] + d2 * ly[i0 + 2]);
  };
  auto evenly_spaced = [&](std::size_t i) {
    const double h = t[i + 1] - t[i];
    for (std::size_t k = i - 2; k < i + 2; ++k)
      if (std::abs((t[k + 1] - t[k]) - h) > 1e-12 * std::max(std::abs(t[k + 1]), 1.0)) return false;
    return true;
  };
  out[0] = three_point(0, t[0]);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (i >= 2 && i + 2 < n && evenly_spaced(i)) {
      const double h = t[i + 1] - t[i];
      out[i] = -(ly[i - 2] - 8.0 * ly[i - 1] + 8.0 * ly[i + 1] - ly[i + 2]) / (12.0 * h);
    } else {
      out[i] = three_point(i - 1, t[i]);
    }
  }
  out[n - 1] = three_point(n - 3, t[n - 1]);
  return out;
}

}  // namespace

DecayTrace evolve(const ResonanceSpectrum& spectrum, double energy, const Eigen::VectorXcd& c0,
                  std::span<const double> times) {
  if (spectrum.defective)
    fail(Errc::ep_proximal, "spectrum is defective (exceptional point); perturb the parameter slightly");
  if (c0.size() != static_cast<Eigen::Index>(spectrum.size()))
    fail(Errc::invalid_input, "c0 length does not match the spectrum");
  if (times.empty() || times[0] != 0.0) fail(Errc::invalid_input, "times must start at t = 0");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < 0.0 || !std::isfinite(times[i])) fail(Errc::invalid_input, "times must be finite and >= 0");
    if (i > 0 && !(times[i] > times[i - 1])) fail(Errc::invalid_input, "times must be strictly increasing");
  }

  const auto n = static_cast<Eigen::Index>(spectrum.size());
  DecayTrace tr;
  tr.energy = energy;
  tr.c0 = c0;
  tr.d = c0.conjugate();
  tr.gammas.resize(static_cast<std::size_t>(n));
  for (Eigen::Index l = 0; l < n; ++l) tr.gammas[static_cast<std::size_t>(l)] = spectrum.width(static_cast<std::size_t>(l));

  const Eigen::VectorXcd& z = spectrum.eigenvalues;
  for (double t : times) {
    cplx pop = 0.0;
    for (Eigen::Index l = 0; l < n; ++l)
      pop += c0(l) * tr.d(l) * std::exp(-tr.gammas[static_cast<std::size_t>(l)] * t);
    if (std::abs(pop) < 1e-300) {
      tr.truncated = true;
      break;
    }
    // amplitudes a_l(t) = c_l exp(-i z_l t); ||Psi||^2 = a^H B a
    Eigen::VectorXcd a(n);
    for (Eigen::Index l = 0; l < n; ++l) a(l) = c0(l) * std::exp(cplx(0.0, -1.0) * z(l) * t);
    tr.times.push_back(t);
    tr.population.push_back(pop);
    tr.q_norm.push_back((a.adjoint() * spectrum.b_matrix * a)(0).real());
  }
  decay_rate(tr);
  return tr;
}

std::vector<double> decay_rate(DecayTrace& tr) {
  const std::size_t m = tr.times.size();
  tr.rate_analytic.assign(m, 0.0);
  std::vector<double> mag(m);
  for (std::size_t j = 0; j < m; ++j) {
    double num = 0.0, den = 0.0;
    for (std::size_t l = 0; l < tr.gammas.size(); ++l) {
      const auto li = static_cast<Eigen::Index>(l);
      const double w = (tr.c0(li) * tr.d(li)).real() * std::exp(-tr.gammas[l] * tr.times[j]);
      num += tr.gammas[l] * w;
      den += w;
    }
    tr.rate_analytic[j] = num / den;
    mag[j] = std::abs(tr.population[j]);
  }
  tr.rate_numeric = log_derivative(tr.times, mag);

  // interior samples only; the end stencils are a lower order
  tr.rate_agreement = 0.0;
  for (std::size_t j = 2; j + 2 < m; ++j) {
    if (mag[j] < 1e-250 || !std::isfinite(tr.rate_numeric[j])) continue;
    const double scale = std::max(std::abs(tr.rate_analytic[j]), 1e-300);
    tr.rate_agreement = std::max(tr.rate_agreement, std::abs(tr.rate_numeric[j] - tr.rate_analytic[j]) / scale);
  }
  return tr.rate_analytic;
}

double crossover_time(double w1, double gamma1, double w2, double gamma2) {
  if (!(w1 > 0.0 && w2 > 0.0) || gamma1 == gamma2)
    fail(Errc::invalid_input, "crossover needs positive weights and distinct widths");
  return std::log(w1 / w2) / (gamma1 - gamma2);
}

std::vector<SaturationRow> average_rate_saturation(const SystemModel& model, std::span<const double> g_grid,
                                                   const std::string& param) {
  if (model.channel_count() != 1 || model.channels()[0].kind != ChannelKind::wideband)
    fail(Errc::invalid_input, "average-rate saturation needs exactly one WIDEBAND channel");
  if (model.levels() < 3) fail(Errc::invalid_input, "average-rate saturation needs N >= 3");

  std::vector<SaturationRow> rows;
  rows.reserve(g_grid.size());
  for (double g : g_grid) {
    const auto m = model.with_param(param, g);
    const auto spec = diagonalize(build_h_eff(m, 0.0));
    std::vector<double> widths(spec.size());
    for (std::size_t l = 0; l < spec.size(); ++l) widths[l] = spec.width(l);
    std::sort(widths.begin(), widths.end());
    SaturationRow row;
    row.g = g;
    row.gamma_max = widths.back();
    double sum = 0.0;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) sum += widths[l];
    row.gamma_av = sum / static_cast<double>(widths.size() - 1);
    row.k_av = row.gamma_av;
    row.tau_av = 1.0 / row.k_av;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace resonance_lab
