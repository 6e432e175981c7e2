#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace resonance_lab::numerics {

struct MinimumResult {
  double x = 0.0;
  double value = 0.0;
  int evaluations = 0;
};

/// Golden-section search for a minimum of a unimodal f on [lo, hi].
MinimumResult golden_section_minimize(const std::function<double(double)>& f, double lo, double hi,
                                      double xtol, int max_evaluations = 400);

/// count >= 2 evenly spaced points, endpoints included.
std::vector<double> linspace(double from, double to, std::size_t count);

double pearson(std::span<const double> x, std::span<const double> y);

/// Removes 2*pi jumps between consecutive phases.
std::vector<double> unwrap(std::span<const double> phases);

struct FitResult {
  Eigen::VectorXd params;
  double residual_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Levenberg-Marquardt least squares. `model(x, p, jac_row)` returns the model
/// value at x and fills the gradient with respect to p.
FitResult levenberg_marquardt(
    const std::function<double(double, const Eigen::VectorXd&, Eigen::Ref<Eigen::VectorXd>)>& model,
    std::span<const double> xs, std::span<const double> ys, Eigen::VectorXd initial,
    int max_iterations = 200);

}  // namespace resonance_lab::numerics
