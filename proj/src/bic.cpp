#include "resonance_lab/bic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "resonance_lab/dynamics.hpp"
#include "resonance_lab/error.hpp"
#include "resonance_lab/numerics.hpp"
#include "resonance_lab/scattering.hpp"

namespace resonance_lab {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

// Fixed point of one branch at an off-grid parameter value, seeded from a
// neighbouring state.
ResonanceState follow(const SystemModel& model, const ResonanceState& seed) {
  try {
    return solve_fixed_point(model, FixedPointSeed{seed.z, seed.eigvec});
  } catch (const Error& e) {
    if (e.code() != Errc::branch_ambiguity) throw;
    return solve_fixed_point(model, FixedPointSeed{seed.z, {}});
  }
}

double total_coupling(const SystemModel& model, double energy) {
  double sum = 0.0;
  for (std::size_t c = 0; c < model.channel_count(); ++c)
    sum += coupling_vector(model, c, energy).values.squaredNorm();
  return sum;
}

std::vector<double> decoupling(const SystemModel& model, double energy, const Eigen::VectorXcd& phi) {
  std::vector<double> out(model.channel_count());
  for (std::size_t c = 0; c < out.size(); ++c)
    out[c] = std::abs((coupling_vector(model, c, energy).values.cast<cplx>().transpose() * phi)(0));
  return out;
}

double width_bound(const SystemModel& model, double energy, const Eigen::VectorXcd& phi) {
  double sum = 0.0;
  for (double r : decoupling(model, energy, phi)) sum += r * r;
  return two_pi * sum;
}

// Eigenpair of spectrum closest (by bilinear overlap) to a reference vector.
std::size_t matching_index(const ResonanceSpectrum& spec, const Eigen::VectorXcd& ref) {
  std::size_t best = 0;
  double best_o = -1.0;
  for (std::size_t k = 0; k < spec.size(); ++k) {
    const double o = bilinear_overlap(ref, spec.right_eigenvectors.col(static_cast<Eigen::Index>(k)));
    if (o > best_o) {
      best_o = o;
      best = k;
    }
  }
  return best;
}

BicCheck make_check(std::string name, double value, double threshold, std::string detail = {}) {
  return {std::move(name), std::isfinite(value) && value <= threshold, value, threshold, std::move(detail)};
}

}  // namespace

std::string coupling_pattern(const Eigen::MatrixXd& g) {
  bool uniform = true, mirror = true;
  const Eigen::Index n = g.rows();
  for (Eigen::Index c = 0; c < g.cols(); ++c)
    for (Eigen::Index i = 0; i < n; ++i) {
      if (g(i, c) != g(0, c)) uniform = false;
      if (g(i, c) != g(n - 1 - i, c)) mirror = false;
    }
  if (uniform) return "uniform";
  if (mirror) return "mirror";
  return "asymmetric";
}

std::vector<BicCandidate> find_bics(const SweepResult& sw, double width_tol) {
  std::vector<BicCandidate> out;
  const std::size_t ng = sw.grid.size();
  if (ng < 3) return out;

  for (std::size_t b = 0; b < sw.branch_count(); ++b) {
    // plateaus (equal widths between two EPs) carry rounding noise only
    double gmax = 0.0;
    for (std::size_t k = 0; k < ng; ++k) gmax = std::max(gmax, sw.points[k][b].gamma_lambda);
    const double noise = 1e-9 * gmax;
    for (std::size_t k = 1; k + 1 < ng; ++k) {
      const double g0 = sw.points[k - 1][b].gamma_lambda;
      const double g1 = sw.points[k][b].gamma_lambda;
      const double g2 = sw.points[k + 1][b].gamma_lambda;
      if (!(g1 <= g0 && g1 <= g2) || g1 == g0) continue;
      if (std::min(g0, g2) - g1 <= noise) continue;

      const ResonanceState& seed = sw.points[k][b];
      const double lo = std::min(sw.grid[k - 1], sw.grid[k + 1]);
      const double hi = std::max(sw.grid[k - 1], sw.grid[k + 1]);
      auto state_at = [&](double x) { return follow(sw.model.with_param(sw.param, x), seed); };
      const auto best = numerics::golden_section_minimize(
          [&](double x) { return state_at(x).gamma_lambda; }, lo, hi, 1e-13 * std::max(1.0, hi - lo), 400);

      const SystemModel m0 = sw.model.with_param(sw.param, best.x);
      const ResonanceState st = follow(m0, seed);
      if (total_coupling(m0, st.e_lambda) == 0.0) continue;

      BicCandidate cand;
      cand.param = sw.param;
      cand.param_value = best.x;
      cand.energy = st.e_lambda;
      cand.width_at_min = st.gamma_lambda;
      cand.branch_id = seed.branch_id;
      cand.z = st.z;
      cand.eigvec = st.eigvec;
      cand.decoupling_residuals = decoupling(m0, st.e_lambda, st.eigvec);
      cand.true_bic = st.gamma_lambda < width_tol;
      cand.coupling_pattern = coupling_pattern(m0.couplings());

      cand.partner_width = -1.0;
      for (std::size_t o = 0; o < sw.branch_count(); ++o) {
        if (o == b) continue;
        const ResonanceState ps = follow(m0, sw.points[k][o]);
        if (ps.gamma_lambda > cand.partner_width) {
          cand.partner_width = ps.gamma_lambda;
          cand.partner_branch = sw.points[k][o].branch_id;
        }
      }
      if (cand.partner_branch < 0) cand.partner_width = 0.0;

      cand.width_inequality_slack = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < ng; ++j) {
        const auto& s = sw.points[j][b];
        const double rhs = width_bound(sw.model.with_param(sw.param, sw.grid[j]), s.e_lambda, s.eigvec);
        cand.width_inequality_slack = std::min(cand.width_inequality_slack, rhs - s.gamma_lambda);
      }
      cand.width_inequality = cand.width_inequality_slack >= -1e-10;
      out.push_back(std::move(cand));
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const BicCandidate& x, const BicCandidate& y) {
    return x.param_value < y.param_value;
  });
  return out;
}

bool BicReport::passed() const {
  return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const BicCheck& c) { return c.passed; });
}

namespace {

struct NearBic {
  bool found = false;
  double param = 0.0;
  ResonanceState state;
  double partner_width = 0.0;
};

// Parameter offset where the quasi-bound state is narrow but resolvable:
// Gamma_near / Gamma_partner in [1e-12, 1e-9].
NearBic locate_near_bic(const BicCandidate& cand, const SystemModel& model) {
  constexpr double ratio_lo = 1e-12, ratio_hi = 1e-9;
  ResonanceState seed;
  seed.z = cand.z;
  seed.eigvec = cand.eigvec;

  for (double dir : {1.0, -1.0}) {
    auto probe = [&](double eps) {
      NearBic nb;
      nb.param = cand.param_value + dir * eps;
      const SystemModel m = model.with_param(cand.param, nb.param);
      nb.state = follow(m, seed);
      const auto spec = diagonalize(build_h_eff(m, nb.state.e_lambda));
      for (std::size_t k = 0; k < spec.size(); ++k) nb.partner_width = std::max(nb.partner_width, spec.width(k));
      return nb;
    };
    auto ratio = [](const NearBic& nb) {
      return nb.partner_width > 0.0 ? nb.state.gamma_lambda / nb.partner_width : 0.0;
    };
    try {
      double eps = 0.1 * std::max(1.0, std::abs(cand.param_value));
      NearBic nb = probe(eps);
      for (int it = 0; it < 60 && ratio(nb) > ratio_hi; ++it) nb = probe(eps *= 0.1);
      double lo = eps, hi = eps * 10.0;
      for (int it = 0; it < 60 && ratio(nb) < ratio_lo; ++it) {
        const double mid = std::sqrt(lo * hi);
        nb = probe(mid);
        if (ratio(nb) < ratio_lo) lo = mid;
        else if (ratio(nb) > ratio_hi) hi = mid;
      }
      nb.found = ratio(nb) >= ratio_lo && ratio(nb) <= ratio_hi;
      if (nb.found) return nb;
    } catch (const Error&) {
      // try the other side
    }
  }
  return {};
}

}  // namespace

BicReport verify_bic(const BicCandidate& cand, const SystemModel& model) {
  BicReport report;
  const SystemModel m0 = model.with_param(cand.param, cand.param_value);
  const double e0 = cand.energy;
  const auto spec = diagonalize(build_h_eff(m0, e0));
  const std::size_t idx = matching_index(spec, cand.eigvec);
  const Eigen::VectorXcd phi = spec.right_eigenvectors.col(static_cast<Eigen::Index>(idx));

  // (a) decoupling from every channel
  const auto resid = decoupling(m0, e0, phi);
  report.checks.push_back(make_check("decoupling", *std::max_element(resid.begin(), resid.end()), 1e-8,
                                     "max_C |<xi_C|V|phi>|"));

  // (b) form-factor sum in the H_B eigenbasis
  {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> closed(m0.hb());
    const Eigen::MatrixXcd u = closed.eigenvectors().cast<cplx>();
    const Eigen::VectorXcd a = u.transpose() * phi;
    double worst = 0.0;
    for (std::size_t c = 0; c < m0.channel_count(); ++c) {
      const Eigen::VectorXcd v = coupling_vector(m0, c, e0).values.cast<cplx>();
      const Eigen::VectorXcd form = u.transpose() * v;  // <xi_C|V|phi^B_l'>
      worst = std::max(worst, std::abs((a.transpose() * form)(0)));
    }
    report.checks.push_back(make_check("form_factor_sum", worst, 1e-8, "max_C |sum a_l' <xi|V|phi^B_l'>|"));
  }

  // (c) S regularity at the BIC and pi phase jump across the nearby quasi-bound state
  {
    double partner = 0.0;
    for (std::size_t k = 0; k < spec.size(); ++k) if (k != idx) partner = std::max(partner, spec.width(k));
    const double h = 1e-6 * std::max(partner, 1e-3);
    double worst = 0.0;
    for (double e : {e0 - h, e0 + h}) {
      try {
        const auto s_spec = diagonalize(build_h_eff(m0, e));
        const auto s = s_matrix_full(m0, s_spec, e);
        const std::size_t j = matching_index(s_spec, phi);
        const auto open = open_channels(m0, e);
        const auto pj = s_spec.right_eigenvectors.col(static_cast<Eigen::Index>(j));
        for (std::size_t a = 0; a < open.size(); ++a)
          for (std::size_t b = 0; b < open.size(); ++b) {
            const Eigen::VectorXcd va = coupling_vector(m0, open[a], e).values.cast<cplx>();
            const Eigen::VectorXcd vb = coupling_vector(m0, open[b], e).values.cast<cplx>();
            const cplx term = cplx(0.0, 2.0 * std::numbers::pi) * (va.transpose() * pj)(0) *
                              (pj.transpose() * vb)(0) / (e - s_spec.eigenvalues(static_cast<Eigen::Index>(j)));
            worst = std::max(worst, std::abs(term));
          }
        if (!s.allFinite()) worst = std::numeric_limits<double>::infinity();
      } catch (const Error&) {
        worst = std::numeric_limits<double>::infinity();
      }
    }
    report.checks.push_back(make_check("s_matrix_regular", worst, 1e-8, "max |BIC pole term in S| at E0 +- h"));

    const NearBic nb = locate_near_bic(cand, model);
    double jump = std::numeric_limits<double>::quiet_NaN();
    if (nb.found) {
      const SystemModel mn = model.with_param(cand.param, nb.param);
      const double gn = nb.state.gamma_lambda;
      const double umax = std::asinh(1e4);
      const auto us = numerics::linspace(-umax, umax, 801);
      std::vector<double> phases;
      phases.reserve(us.size());
      const bool constant = mn.energy_independent();
      std::optional<ResonanceSpectrum> fixed;
      if (constant) fixed = diagonalize(build_h_eff(mn, 0.0));
      try {
        for (double u : us) {
          const double e = nb.state.e_lambda + gn * std::sinh(u);
          const auto s_spec = constant ? *fixed : diagonalize(build_h_eff(mn, e));
          phases.push_back(2.0 * scattering_phase(s_matrix_full(mn, s_spec, e)));
        }
        const auto unwrapped = numerics::unwrap(phases);
        jump = 0.5 * (unwrapped.back() - unwrapped.front());
      } catch (const Error&) {
      }
      report.near_param = nb.param;
      report.near_width = gn;
    }
    report.phase_jump = jump;
    std::ostringstream detail;
    detail << "delta(E+W) - delta(E-W), W = 1e4 Gamma_near";
    report.checks.push_back(make_check("phase_jump", std::abs(jump - std::numbers::pi), 1e-3, detail.str()));
  }

  // (d) population of the BIC state stays constant
  {
    Eigen::VectorXcd c0 = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(spec.size()));
    c0(static_cast<Eigen::Index>(idx)) = 1.0;
    const auto times = numerics::linspace(0.0, 100.0, 101);
    double worst = std::numeric_limits<double>::infinity();
    try {
      const auto tr = evolve(spec, e0, c0, times);
      worst = tr.truncated ? worst : 0.0;
      for (std::size_t j = 0; j < tr.times.size(); ++j) {
        worst = std::max(worst, std::abs(std::abs(tr.population[j]) / std::abs(tr.population[0]) - 1.0));
        worst = std::max(worst, std::abs(tr.q_norm[j] / tr.q_norm[0] - 1.0));
      }
    } catch (const Error&) {
    }
    report.checks.push_back(make_check("population_constant", worst, 1e-8, "max relative change over t in [0, 100]"));
  }
  return report;
}

}  // namespace resonance_lab
