#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

// Data-parallel inner loops shared by the oracle and the energy scans.
// Each kernel has a scalar reference and an AVX2/FMA variant; the variant is
// picked once at runtime from CPUID and can be forced to the reference with
// RESONANCE_LAB_SIMD=scalar.

namespace resonance_lab::kernels {

enum class Isa { scalar, avx2 };

const char* to_string(Isa isa) noexcept;
bool isa_available(Isa isa) noexcept;
Isa active_isa() noexcept;

/// Structure-of-arrays set of complex weights w_k and poles p_k.
struct PoleSet {
  std::vector<double> w_re, w_im, p_re, p_im;

  void push(std::complex<double> weight, std::complex<double> pole);
  std::size_t size() const { return w_re.size(); }
};

/// out[j] = sum_k weights[k] * exp(-i * freqs[k] * times[j])
void phase_sum(std::span<const double> weights, std::span<const double> freqs,
               std::span<const double> times, std::span<std::complex<double>> out,
               Isa isa = active_isa());

/// out[j] = sum_k w_k / (x[j] - p_k)
void pole_sum(const PoleSet& poles, std::span<const double> x, std::span<std::complex<double>> out,
              Isa isa = active_isa());

namespace scalar {
void phase_sum(std::span<const double> weights, std::span<const double> freqs,
               std::span<const double> times, std::span<std::complex<double>> out);
void pole_sum(const PoleSet& poles, std::span<const double> x, std::span<std::complex<double>> out);
}  // namespace scalar

namespace avx2 {
// |freqs[k] * times[j]| must stay below 1e9 (argument reduction range).
void phase_sum(std::span<const double> weights, std::span<const double> freqs,
               std::span<const double> times, std::span<std::complex<double>> out);
void pole_sum(const PoleSet& poles, std::span<const double> x, std::span<std::complex<double>> out);
/// Vector sin/cos of four lanes; exposed for accuracy tests.
void sincos4(const double* x, double* s, double* c);
}  // namespace avx2

}  // namespace resonance_lab::kernels
