#include <cmath>
#include <numbers>

#include "doctest.h"
#include "resonance_lab/numerics.hpp"

using namespace resonance_lab::numerics;

TEST_SUITE("numerics") {

TEST_CASE("golden section") {
  const auto r = golden_section_minimize([](double x) { return (x - 0.3) * (x - 0.3) + 1.0; }, -1.0, 2.0, 1e-12);
  CHECK(r.x == doctest::Approx(0.3).epsilon(1e-8));
  CHECK(r.value == doctest::Approx(1.0));
}

TEST_CASE("linspace hits both ends") {
  const auto g = linspace(0.01, 1.0, 99);
  CHECK(g.size() == 99);
  CHECK(g.front() == 0.01);
  CHECK(g.back() == 1.0);
  CHECK_THROWS(linspace(2.0, 3.0, 1));
}

TEST_CASE("pearson") {
  const std::vector<double> x{1, 2, 3, 4}, y{2, 4, 6, 8}, z{4, 3, 2, 1};
  CHECK(pearson(x, y) == doctest::Approx(1.0));
  CHECK(pearson(x, z) == doctest::Approx(-1.0));
}

TEST_CASE("unwrap removes 2 pi jumps") {
  const std::vector<double> p{3.0, -3.1, -2.9, 0.5, -2.5};
  const auto u = unwrap(p);
  CHECK(u[1] == doctest::Approx(-3.1 + 2.0 * std::numbers::pi));
  CHECK(u[2] == doctest::Approx(-2.9 + 2.0 * std::numbers::pi));
  CHECK(u[3] == doctest::Approx(0.5));
  CHECK(u[4] == doctest::Approx(-2.5));
}

TEST_CASE("Levenberg-Marquardt fits a Lorentzian") {
  std::vector<double> xs, ys;
  for (int i = 0; i <= 200; ++i) {
    const double x = -1.0 + 0.01 * i;
    xs.push_back(x);
    ys.push_back(0.7 * 0.1 / ((x - 0.12) * (x - 0.12) + 0.01));
  }
  Eigen::VectorXd p0(3);
  p0 << 0.0, 0.2, 1.0;
  const auto fit = levenberg_marquardt(
      [](double x, const Eigen::VectorXd& p, Eigen::Ref<Eigen::VectorXd> grad) {
        const double d = x - p(0), den = d * d + p(1) * p(1);
        const double f = p(2) * p(1) / den;
        grad(0) = 2.0 * f * d / den;
        grad(1) = p(2) / den - 2.0 * f * p(1) / den;
        grad(2) = p(1) / den;
        return f;
      },
      xs, ys, p0);
  CHECK(fit.converged);
  CHECK(fit.params(0) == doctest::Approx(0.12).epsilon(1e-8));
  CHECK(std::abs(fit.params(1)) == doctest::Approx(0.1).epsilon(1e-8));
}

}
