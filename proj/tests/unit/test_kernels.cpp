#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "doctest.h"
#include "resonance_lab/kernels.hpp"

using namespace resonance_lab::kernels;
using cplx = std::complex<double>;

TEST_SUITE("kernels") {

TEST_CASE("phase sum reference") {
  const std::vector<double> w{0.5, 0.25, 0.25}, f{-1.0, 0.0, 2.0}, t{0.0, 0.3, 7.0};
  std::vector<cplx> out(t.size());
  scalar::phase_sum(w, f, t, out);
  for (std::size_t j = 0; j < t.size(); ++j) {
    cplx want = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) want += w[k] * std::exp(cplx(0.0, -f[k] * t[j]));
    CHECK(std::abs(out[j] - want) <= 1e-15);
  }
}

TEST_CASE("pole sum reference") {
  PoleSet p;
  p.push({1.0, 0.5}, {0.2, -0.1});
  p.push({-0.3, 0.0}, {-1.0, -0.02});
  const std::vector<double> x{-2.0, 0.0, 0.2, 1.5};
  std::vector<cplx> out(x.size());
  scalar::pole_sum(p, x, out);
  for (std::size_t j = 0; j < x.size(); ++j) {
    const cplx want = cplx(1.0, 0.5) / (x[j] - cplx(0.2, -0.1)) + cplx(-0.3, 0.0) / (x[j] - cplx(-1.0, -0.02));
    CHECK(std::abs(out[j] - want) <= 1e-14);
  }
}

TEST_CASE("avx2 variants match the scalar reference") {
  if (!isa_available(Isa::avx2)) {
    MESSAGE("avx2 not available on this machine");
    return;
  }
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (std::size_t n : {1u, 3u, 4u, 5u, 64u, 1001u}) {
    std::vector<double> w(n), f(n), t{0.0, 0.01, 1.0, 33.3, 500.0};
    for (std::size_t k = 0; k < n; ++k) w[k] = u(rng), f[k] = 5.0 * u(rng);
    std::vector<cplx> a(t.size()), b(t.size());
    scalar::phase_sum(w, f, t, a);
    avx2::phase_sum(w, f, t, b);
    double scale = 0.0;
    for (double x : w) scale += std::abs(x);
    for (std::size_t j = 0; j < t.size(); ++j) CHECK(std::abs(a[j] - b[j]) <= 1e-13 * scale);

    PoleSet p;
    for (std::size_t k = 0; k < n; ++k) p.push({u(rng), u(rng)}, {2.0 * u(rng), -0.01 - std::abs(u(rng))});
    std::vector<double> x;
    for (int j = 0; j < 37; ++j) x.push_back(-3.0 + 6.0 * j / 36.0);
    std::vector<cplx> pa(x.size()), pb(x.size());
    scalar::pole_sum(p, x, pa);
    avx2::pole_sum(p, x, pb);
    for (std::size_t j = 0; j < x.size(); ++j) CHECK(std::abs(pa[j] - pb[j]) <= 1e-12 * (1.0 + std::abs(pa[j])));
  }
}

TEST_CASE("vector sincos accuracy") {
  if (!isa_available(Isa::avx2)) return;
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1e4, 1e4);
  double worst = 0.0;
  for (int trial = 0; trial < 20000; ++trial) {
    double x[4], s[4], c[4];
    for (double& v : x) v = trial < 4 ? 0.0 : u(rng);
    avx2::sincos4(x, s, c);
    for (int i = 0; i < 4; ++i)
      worst = std::max({worst, std::abs(s[i] - std::sin(x[i])), std::abs(c[i] - std::cos(x[i]))});
  }
  CHECK(worst <= 1e-14);
}

TEST_CASE("dispatch honours the requested isa") {
  const std::vector<double> w{1.0}, f{1.0}, t{1.0};
  std::vector<cplx> out(1);
  phase_sum(w, f, t, out, Isa::scalar);
  CHECK(std::abs(out[0] - std::exp(cplx(0.0, -1.0))) <= 1e-15);
  CHECK(std::string(to_string(active_isa())).size() > 0);
}

}
