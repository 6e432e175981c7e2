#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string_view>

#include "resonance_lab/error.hpp"
#include "resonance_lab/kernels.hpp"

namespace resonance_lab::kernels {

namespace {

bool cpu_has_avx2() noexcept {
#if defined(RESONANCE_LAB_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa detect() noexcept {
  if (const char* env = std::getenv("RESONANCE_LAB_SIMD"); env && std::string_view(env) == "scalar")
    return Isa::scalar;
  return cpu_has_avx2() ? Isa::avx2 : Isa::scalar;
}

void check_sizes(bool ok) {
  if (!ok) throw Error("kernels", Errc::invalid_input, "span size mismatch");
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

const char* to_string(Isa isa) noexcept { return isa == Isa::avx2 ? "avx2" : "scalar"; }

bool isa_available(Isa isa) noexcept {
  static const bool avx2 = cpu_has_avx2();
  return isa == Isa::scalar || avx2;
}

Isa active_isa() noexcept {
  static const Isa isa = detect();
  return isa;
}

void PoleSet::push(std::complex<double> weight, std::complex<double> pole) {
  w_re.push_back(weight.real());
  w_im.push_back(weight.imag());
  p_re.push_back(pole.real());
  p_im.push_back(pole.imag());
}

void phase_sum(std::span<const double> weights, std::span<const double> freqs,
               std::span<const double> times, std::span<std::complex<double>> out, Isa isa) {
  check_sizes(weights.size() == freqs.size() && times.size() == out.size());
#if defined(RESONANCE_LAB_HAVE_AVX2)
  if (isa == Isa::avx2 && isa_available(Isa::avx2) && max_abs(freqs) * max_abs(times) < 1e9) {
    avx2::phase_sum(weights, freqs, times, out);
    return;
  }
#endif
  scalar::phase_sum(weights, freqs, times, out);
}

void pole_sum(const PoleSet& poles, std::span<const double> x, std::span<std::complex<double>> out,
              Isa isa) {
  check_sizes(x.size() == out.size() && poles.w_im.size() == poles.size() &&
              poles.p_re.size() == poles.size() && poles.p_im.size() == poles.size());
#if defined(RESONANCE_LAB_HAVE_AVX2)
  if (isa == Isa::avx2 && isa_available(Isa::avx2)) {
    avx2::pole_sum(poles, x, out);
    return;
  }
#endif
  scalar::pole_sum(poles, x, out);
}

}  // namespace resonance_lab::kernels
