#include <immintrin.h>

#include <cmath>

#include "resonance_lab/kernels.hpp"

namespace resonance_lab::kernels::avx2 {

namespace {

// pi/2 split in three parts for Cody-Waite reduction
constexpr double kPio2_1 = 2.0 * 7.85398125648498535156e-1;
constexpr double kPio2_2 = 2.0 * 3.77489470793079817668e-8;
constexpr double kPio2_3 = 2.0 * 2.69515142907905952645e-15;

// minimax coefficients on [-pi/4, pi/4]
constexpr double kSin[] = {1.58962301576546568060e-10, -2.50507477628578072866e-8,
                           2.75573136213857245213e-6,  -1.98412698295895385996e-4,
                           8.33333333332211858878e-3,  -1.66666666666666307295e-1};
constexpr double kCos[] = {-1.13585365213876817300e-11, 2.08757008419747316778e-9,
                           -2.75573141792967388112e-7,  2.48015872888517045348e-5,
                           -1.38888888888730564116e-3,  4.16666666666665929218e-2};

inline __m256d horner(__m256d z, const double (&c)[6]) {
  __m256d p = _mm256_set1_pd(c[0]);
  for (int i = 1; i < 6; ++i) p = _mm256_fmadd_pd(p, z, _mm256_set1_pd(c[i]));
  return p;
}

inline void sincos_pd(__m256d x, __m256d& s_out, __m256d& c_out) {
  const __m256d n = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(0.63661977236758134308)),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, _mm256_set1_pd(kPio2_1), x);
  r = _mm256_fnmadd_pd(n, _mm256_set1_pd(kPio2_2), r);
  r = _mm256_fnmadd_pd(n, _mm256_set1_pd(kPio2_3), r);

  const __m256d rr = _mm256_mul_pd(r, r);
  const __m256d sin_r = _mm256_fmadd_pd(_mm256_mul_pd(r, rr), horner(rr, kSin), r);
  __m256d cos_r = _mm256_fnmadd_pd(_mm256_set1_pd(0.5), rr, _mm256_set1_pd(1.0));
  cos_r = _mm256_fmadd_pd(_mm256_mul_pd(rr, rr), horner(rr, kCos), cos_r);

  const __m256i q = _mm256_cvtepi32_epi64(_mm256_cvtpd_epi32(n));
  const __m256i one = _mm256_set1_epi64x(1), two = _mm256_set1_epi64x(2);
  const __m256d swap = _mm256_castsi256_pd(_mm256_cmpeq_epi64(_mm256_and_si256(q, one), one));
  const __m256d sin_neg = _mm256_castsi256_pd(_mm256_cmpeq_epi64(_mm256_and_si256(q, two), two));
  const __m256d cos_neg = _mm256_castsi256_pd(
      _mm256_cmpeq_epi64(_mm256_and_si256(_mm256_add_epi64(q, one), two), two));
  const __m256d sign = _mm256_set1_pd(-0.0);

  __m256d s = _mm256_blendv_pd(sin_r, cos_r, swap);
  __m256d c = _mm256_blendv_pd(cos_r, sin_r, swap);
  s_out = _mm256_xor_pd(s, _mm256_and_pd(sin_neg, sign));
  c_out = _mm256_xor_pd(c, _mm256_and_pd(cos_neg, sign));
}

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

}  // namespace

void sincos4(const double* x, double* s, double* c) {
  __m256d sv, cv;
  sincos_pd(_mm256_loadu_pd(x), sv, cv);
  _mm256_storeu_pd(s, sv);
  _mm256_storeu_pd(c, cv);
}

void phase_sum(std::span<const double> weights, std::span<const double> freqs,
               std::span<const double> times, std::span<std::complex<double>> out) {
  const std::size_t m = weights.size();
  const std::size_t body = m - m % 4;
  for (std::size_t j = 0; j < times.size(); ++j) {
    const __m256d t = _mm256_set1_pd(times[j]);
    __m256d acc_re = _mm256_setzero_pd(), acc_im = _mm256_setzero_pd();
    for (std::size_t k = 0; k < body; k += 4) {
      const __m256d w = _mm256_loadu_pd(weights.data() + k);
      const __m256d theta = _mm256_mul_pd(_mm256_loadu_pd(freqs.data() + k), t);
      __m256d s, c;
      sincos_pd(theta, s, c);
      acc_re = _mm256_fmadd_pd(w, c, acc_re);
      acc_im = _mm256_fnmadd_pd(w, s, acc_im);
    }
    double re = hsum(acc_re), im = hsum(acc_im);
    for (std::size_t k = body; k < m; ++k) {
      const double theta = freqs[k] * times[j];
      re += weights[k] * std::cos(theta);
      im -= weights[k] * std::sin(theta);
    }
    out[j] = {re, im};
  }
}

void pole_sum(const PoleSet& poles, std::span<const double> x, std::span<std::complex<double>> out) {
  const std::size_t m = poles.size();
  const std::size_t body = m - m % 4;
  const __m256d one = _mm256_set1_pd(1.0);
  for (std::size_t j = 0; j < x.size(); ++j) {
    const __m256d xv = _mm256_set1_pd(x[j]);
    __m256d acc_re = _mm256_setzero_pd(), acc_im = _mm256_setzero_pd();
    for (std::size_t k = 0; k < body; k += 4) {
      const __m256d a = _mm256_sub_pd(xv, _mm256_loadu_pd(poles.p_re.data() + k));
      const __m256d b = _mm256_sub_pd(_mm256_setzero_pd(), _mm256_loadu_pd(poles.p_im.data() + k));
      const __m256d wr = _mm256_loadu_pd(poles.w_re.data() + k);
      const __m256d wi = _mm256_loadu_pd(poles.w_im.data() + k);
      const __m256d inv = _mm256_div_pd(one, _mm256_fmadd_pd(a, a, _mm256_mul_pd(b, b)));
      acc_re = _mm256_fmadd_pd(_mm256_fmadd_pd(wr, a, _mm256_mul_pd(wi, b)), inv, acc_re);
      acc_im = _mm256_fmadd_pd(_mm256_fmsub_pd(wi, a, _mm256_mul_pd(wr, b)), inv, acc_im);
    }
    double re = hsum(acc_re), im = hsum(acc_im);
    for (std::size_t k = body; k < m; ++k) {
      const double a = x[j] - poles.p_re[k];
      const double b = -poles.p_im[k];
      const double inv = 1.0 / (a * a + b * b);
      re += (poles.w_re[k] * a + poles.w_im[k] * b) * inv;
      im += (poles.w_im[k] * a - poles.w_re[k] * b) * inv;
    }
    out[j] = {re, im};
  }
}

}  // namespace resonance_lab::kernels::avx2
