#include <cmath>

#include "resonance_lab/kernels.hpp"

namespace resonance_lab::kernels::scalar {

void phase_sum(std::span<const double> weights, std::span<const double> freqs,
               std::span<const double> times, std::span<std::complex<double>> out) {
  const std::size_t m = weights.size();
  for (std::size_t j = 0; j < times.size(); ++j) {
    const double t = times[j];
    double re = 0.0, im = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      const double theta = freqs[k] * t;
      re += weights[k] * std::cos(theta);
      im -= weights[k] * std::sin(theta);
    }
    out[j] = {re, im};
  }
}

void pole_sum(const PoleSet& poles, std::span<const double> x, std::span<std::complex<double>> out) {
  const std::size_t m = poles.size();
  for (std::size_t j = 0; j < x.size(); ++j) {
    double re = 0.0, im = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      const double a = x[j] - poles.p_re[k];
      const double b = -poles.p_im[k];
      const double inv = 1.0 / (a * a + b * b);
      re += (poles.w_re[k] * a + poles.w_im[k] * b) * inv;
      im += (poles.w_im[k] * a - poles.w_re[k] * b) * inv;
    }
    out[j] = {re, im};
  }
}

}  // namespace resonance_lab::kernels::scalar
