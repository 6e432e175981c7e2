#include "resonance_lab/numerics.hpp"

#include <cmath>
#include <numbers>

#include "resonance_lab/error.hpp"

namespace resonance_lab::numerics {

MinimumResult golden_section_minimize(const std::function<double(double)>& f, double lo, double hi,
                                      double xtol, int max_evaluations) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  int evals = 2;
  while (std::abs(b - a) > xtol && evals < max_evaluations) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
    ++evals;
  }
  return fc < fd ? MinimumResult{c, fc, evals} : MinimumResult{d, fd, evals};
}

std::vector<double> linspace(double from, double to, std::size_t count) {
  if (count < 2) throw Error("numerics", Errc::invalid_input, "linspace needs at least 2 points");
  std::vector<double> out(count);
  const double step = (to - from) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) out[i] = from + step * static_cast<double>(i);
  out.back() = to;
  return out;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw Error("numerics", Errc::invalid_input, "pearson needs two equal-length samples");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

std::vector<double> unwrap(std::span<const double> phases) {
  std::vector<double> out(phases.begin(), phases.end());
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double offset = 0.0;
  for (std::size_t i = 1; i < phases.size(); ++i) {
    const double jump = phases[i] - phases[i - 1];
    offset -= two_pi * std::round(jump / two_pi);
    out[i] = phases[i] + offset;
  }
  return out;
}

FitResult levenberg_marquardt(
    const std::function<double(double, const Eigen::VectorXd&, Eigen::Ref<Eigen::VectorXd>)>& model,
    std::span<const double> xs, std::span<const double> ys, Eigen::VectorXd initial,
    int max_iterations) {
  const auto m = static_cast<Eigen::Index>(xs.size());
  const auto n = initial.size();
  Eigen::MatrixXd jac(m, n);
  Eigen::VectorXd res(m);

  auto evaluate = [&](const Eigen::VectorXd& p, bool with_jac) {
    Eigen::VectorXd row(n);
    for (Eigen::Index i = 0; i < m; ++i) {
      res(i) = ys[static_cast<std::size_t>(i)] - model(xs[static_cast<std::size_t>(i)], p, row);
      if (with_jac) jac.row(i) = row.transpose();
    }
    return res.squaredNorm();
  };

  FitResult out;
  out.params = std::move(initial);
  double cost = evaluate(out.params, true);
  double lambda = 1e-3;
  for (int it = 0; it < max_iterations; ++it) {
    out.iterations = it + 1;
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd jtr = jac.transpose() * res;
    Eigen::MatrixXd damped = jtj;
    damped.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-300);
    const Eigen::VectorXd step = damped.ldlt().solve(jtr);
    const Eigen::VectorXd trial = out.params + step;
    const double trial_cost = evaluate(trial, false);
    if (std::isfinite(trial_cost) && trial_cost < cost) {
      const double gain = cost - trial_cost;
      out.params = trial;
      cost = evaluate(out.params, true);
      lambda = std::max(lambda / 3.0, 1e-12);
      if (gain <= 1e-15 * cost || step.norm() <= 1e-13 * (out.params.norm() + 1e-13)) {
        out.converged = true;
        break;
      }
    } else {
      evaluate(out.params, true);
      lambda *= 4.0;
      if (lambda > 1e12) {
        out.converged = true;
        break;
      }
    }
  }
  out.residual_norm = std::sqrt(cost);
  return out;
}

}  // namespace resonance_lab::numerics
