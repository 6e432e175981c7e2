#include "resonance_lab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "resonance_lab/error.hpp"
#include "resonance_lab/numerics.hpp"
#include "resonance_lab/parallel.hpp"

namespace resonance_lab {

namespace {

[[noreturn]] void fail(Errc code, const std::string& what) { throw Error("spectral", code, what); }

void apply_sign_convention(Eigen::Ref<Eigen::VectorXcd> v) {
  Eigen::Index best = 0;
  double best_mag = -1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double mag = std::abs(v(i));
    if (mag > best_mag) {
      best_mag = mag;
      best = i;
    }
  }
  const cplx lead = v(best);
  const bool keep = lead.real() > 0.0 || (lead.real() == 0.0 && lead.imag() > 0.0);
  if (!keep) v = -v;
}

}  // namespace

double phase_rigidity_of(const Eigen::VectorXcd& v) {
  const double norm2 = v.squaredNorm();
  if (norm2 == 0.0) return 0.0;
  return std::abs(v.cwiseProduct(v).sum()) / norm2;
}

double bilinear_overlap(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
  return std::abs(a.cwiseProduct(b).sum());
}

ResonanceSpectrum diagonalize_matrix(const Eigen::MatrixXcd& matrix, double energy,
                                     const DiagonalizeOptions& options) {
  const auto n = matrix.rows();
  if (n == 0 || matrix.cols() != n) fail(Errc::invalid_input, "H_eff must be a non-empty square matrix");

  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(matrix, true);
  if (solver.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "complex eigensolver did not converge (n=" << n << ", ||H||=" << matrix.norm() << ")";
    fail(Errc::numerical_failure, msg.str());
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  const auto& ev = solver.eigenvalues();
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    if (ev(a).real() != ev(b).real()) return ev(a).real() < ev(b).real();
    return ev(a).imag() < ev(b).imag();
  });

  ResonanceSpectrum s;
  s.energy = energy;
  s.eigenvalues.resize(n);
  s.right_eigenvectors.resize(n, n);
  s.a_diag.resize(n);
  s.phase_rigidity.resize(n);
  s.defective_mask.assign(static_cast<std::size_t>(n), false);

  const double h_norm = std::max(matrix.norm(), std::numeric_limits<double>::min());
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index src = order[static_cast<std::size_t>(k)];
    const cplx z = ev(src);
    Eigen::VectorXcd v = solver.eigenvectors().col(src);
    v /= v.norm();

    const double resid = (matrix * v - z * v).norm();
    if (!(resid <= options.residual_tol * h_norm)) {
      std::ostringstream msg;
      msg << "eigenpair residual " << resid << " exceeds " << options.residual_tol << " * ||H|| ("
          << h_norm << ")";
      fail(Errc::numerical_failure, msg.str());
    }

    const cplx bilinear = v.cwiseProduct(v).sum();
    if (std::abs(bilinear) < options.defect_tol) {
      s.defective = true;
      s.defective_mask[static_cast<std::size_t>(k)] = true;
    } else {
      v /= std::sqrt(bilinear);
    }
    apply_sign_convention(v);

    s.eigenvalues(k) = z;
    s.right_eigenvectors.col(k) = v;
    s.phase_rigidity(k) = phase_rigidity_of(v);
    s.a_diag(k) = s.defective_mask[static_cast<std::size_t>(k)] ? 1.0 / s.phase_rigidity(k)
                                                                 : v.squaredNorm();
  }
  s.b_matrix = s.right_eigenvectors.adjoint() * s.right_eigenvectors;
  s.b_matrix.diagonal() = s.a_diag.cast<cplx>();
  return s;
}

ResonanceSpectrum diagonalize(const EffectiveHamiltonian& h, const DiagonalizeOptions& options) {
  return diagonalize_matrix(h.matrix, h.energy, options);
}

ResonanceState state_from_spectrum(const ResonanceSpectrum& spectrum, std::size_t index) {
  const auto k = static_cast<Eigen::Index>(index);
  ResonanceState st;
  st.z = spectrum.eigenvalues(k);
  st.e_lambda = st.z.real();
  st.gamma_lambda = -2.0 * st.z.imag();
  st.eigvec = spectrum.right_eigenvectors.col(k);
  st.rigidity = spectrum.phase_rigidity(k);
  st.a_lambda = spectrum.a_diag(k);
  st.defective = spectrum.defective_mask[index];
  st.converged = true;
  st.iterations = 1;
  return st;
}

namespace {

std::size_t select_branch(const ResonanceSpectrum& spec, const FixedPointSeed& seed,
                          double ambiguity_tol) {
  const std::size_t n = spec.size();
  if (seed.vector.size() == 0) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) {
      const double d = std::abs(spec.eigenvalues(static_cast<Eigen::Index>(k)) - seed.z);
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    return best;
  }
  if (seed.vector.size() != static_cast<Eigen::Index>(n))
    fail(Errc::invalid_input, "seed vector length does not match the model");
  std::size_t best = 0;
  double first = -1.0, second = -1.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double o = bilinear_overlap(seed.vector, spec.right_eigenvectors.col(static_cast<Eigen::Index>(k)));
    if (o > first) {
      second = first;
      first = o;
      best = k;
    } else if (o > second) {
      second = o;
    }
  }
  if (n > 1 && first - second <= ambiguity_tol)
    fail(Errc::branch_ambiguity, "two eigenvectors overlap the tracked branch equally");
  return best;
}

}  // namespace

ResonanceState solve_fixed_point(const SystemModel& model, const FixedPointSeed& seed,
                                 const FixedPointOptions& options) {
  if (!(options.tol_fp > 0.0)) fail(Errc::invalid_input, "tol_fp must be > 0");
  if (!std::isfinite(seed.z.real())) fail(Errc::invalid_input, "seed must be finite");

  double energy = seed.z.real();
  FixedPointSeed tracker = seed;
  ResonanceState state;
  for (int it = 1; it <= options.max_iterations; ++it) {
    const auto spec = diagonalize(build_h_eff(model, energy), options.diagonalize);
    const std::size_t idx = select_branch(spec, tracker, options.ambiguity_tol);
    state = state_from_spectrum(spec, idx);
    state.iterations = it;
    if (model.energy_independent()) return state;  // E_lambda = Re z exactly
    state.e_lambda = energy;
    state.converged = false;

    const double residual = state.z.real() - energy;
    if (std::abs(residual) <= options.tol_fp) {
      state.converged = true;
      return state;
    }
    tracker.vector = state.eigvec;
    tracker.z = state.z;
    energy += options.damping * residual;
  }
  return state;
}

ResonanceState solve_fixed_point(const SystemModel& model, cplx seed, double tol_fp) {
  FixedPointOptions opts;
  opts.tol_fp = tol_fp;
  return solve_fixed_point(model, FixedPointSeed{seed, {}}, opts);
}

// ---------------------------------------------------------------------------
// sweep

namespace {

struct MatchOutcome {
  bool ok = false;
  std::vector<std::size_t> assignment;  // branch b -> candidate index
  double min_tied_rigidity = 1.0;
};

MatchOutcome match_branches(const std::vector<ResonanceState>& prev,
                            const std::vector<ResonanceState>& cand, const SweepOptions& opt) {
  const std::size_t n = prev.size();
  MatchOutcome out;
  if (cand.size() != n) return out;

  std::vector<double> overlap(n * n);
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t k = 0; k < n; ++k) overlap[b * n + k] = bilinear_overlap(prev[b].eigvec, cand[k].eigvec);

  bool ambiguous = false;
  for (std::size_t b = 0; b < n && n > 1; ++b) {
    std::size_t arg = 0;
    double first = -1.0, second = -1.0;
    std::size_t second_arg = 0;
    for (std::size_t k = 0; k < n; ++k) {
      const double o = overlap[b * n + k];
      if (o > first) {
        second = first;
        second_arg = arg;
        first = o;
        arg = k;
      } else if (o > second) {
        second = o;
        second_arg = k;
      }
    }
    if (first - second <= opt.fixed_point.ambiguity_tol * std::max(first, 1.0)) {
      ambiguous = true;
      out.min_tied_rigidity = std::min({out.min_tied_rigidity, cand[arg].rigidity, cand[second_arg].rigidity,
                                        prev[b].rigidity});
    }
  }

  // greedy global assignment by decreasing overlap
  std::vector<std::size_t> pairs(n * n);
  std::iota(pairs.begin(), pairs.end(), 0);
  std::stable_sort(pairs.begin(), pairs.end(),
                   [&](std::size_t a, std::size_t b) { return overlap[a] > overlap[b]; });
  out.assignment.assign(n, n);
  std::vector<bool> used(n, false);
  for (std::size_t p : pairs) {
    const std::size_t b = p / n, k = p % n;
    if (out.assignment[b] != n || used[k]) continue;
    out.assignment[b] = k;
    used[k] = true;
  }
  bool continuous = true;
  for (std::size_t b = 0; b < n; ++b)
    if (overlap[b * n + out.assignment[b]] < opt.continuity_min) continuous = false;

  out.ok = !ambiguous && continuous;
  if (!continuous && !ambiguous) out.min_tied_rigidity = 1.0;
  return out;
}

// Assignment minimizing total eigenvalue displacement; first minimal
// permutation in lexicographic order wins.
std::vector<std::size_t> match_by_continuity(const std::vector<ResonanceState>& prev,
                                             const std::vector<ResonanceState>& cand) {
  const std::size_t n = prev.size();
  std::vector<std::size_t> perm(n), best;
  std::iota(perm.begin(), perm.end(), 0);
  if (n > 8) {
    // greedy fallback for large N
    best.assign(n, n);
    std::vector<bool> used(n, false);
    for (std::size_t b = 0; b < n; ++b) {
      double dmin = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < n; ++k)
        if (!used[k] && std::abs(cand[k].z - prev[b].z) < dmin) {
          dmin = std::abs(cand[k].z - prev[b].z);
          best[b] = k;
        }
      used[best[b]] = true;
    }
    return best;
  }
  double best_cost = std::numeric_limits<double>::infinity();
  do {
    double cost = 0.0;
    for (std::size_t b = 0; b < n; ++b) cost += std::abs(cand[perm[b]].z - prev[b].z);
    if (cost < best_cost) {
      best_cost = cost;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

class Sweeper {
 public:
  Sweeper(const SystemModel& model, std::string param, const SweepOptions& opt)
      : model_(model), param_(std::move(param)), opt_(opt) {}

  std::vector<ResonanceState> initial(double x, const ResonanceSpectrum* cached) {
    const SystemModel m = model_.with_param(param_, x);
    std::vector<ResonanceState> states;
    if (m.energy_independent()) {
      const ResonanceSpectrum spec = cached ? *cached : diagonalize(build_h_eff(m, 0.0), opt_.fixed_point.diagonalize);
      for (std::size_t k = 0; k < spec.size(); ++k) states.push_back(state_from_spectrum(spec, k));
    } else {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> closed(m.hb());
      for (Eigen::Index i = 0; i < closed.eigenvalues().size(); ++i) {
        FixedPointSeed seed{cplx(closed.eigenvalues()(i), 0.0), closed.eigenvectors().col(i).cast<cplx>()};
        states.push_back(solve_fixed_point(m, seed, opt_.fixed_point));
      }
      for (std::size_t a = 0; a < states.size(); ++a)
        for (std::size_t b = a + 1; b < states.size(); ++b)
          if (std::abs(states[a].z - states[b].z) <= 1e-9 * (1.0 + std::abs(states[a].z)))
            fail(Errc::branch_ambiguity, "initial branches converged to the same resonance");
    }
    for (std::size_t b = 0; b < states.size(); ++b) states[b].branch_id = static_cast<int>(b);
    return states;
  }

  std::vector<ResonanceState> advance(double xa, const std::vector<ResonanceState>& prev, double xb,
                                      const ResonanceSpectrum* cached, int depth, bool& ep_crossed) {
    std::vector<ResonanceState> cand;
    bool solver_ambiguous = false;
    try {
      cand = candidates(xb, prev, cached, /*track=*/true);
    } catch (const Error& e) {
      if (e.code() != Errc::branch_ambiguity) throw;
      solver_ambiguous = true;
    }

    MatchOutcome match;
    if (!solver_ambiguous) {
      match = match_branches(prev, cand, opt_);
      if (match.ok) return assign(prev, cand, match.assignment);
    }

    if (depth < opt_.max_refinement) {
      ++refinements_;
      const double xm = 0.5 * (xa + xb);
      const auto mid = advance(xa, prev, xm, nullptr, depth + 1, ep_crossed);
      return advance(xm, mid, xb, cached, depth + 1, ep_crossed);
    }

    if (solver_ambiguous) cand = candidates(xb, prev, cached, /*track=*/false);
    if (!solver_ambiguous) {
      if (match.min_tied_rigidity >= opt_.ep_rigidity_gate) {
        std::ostringstream msg;
        msg << "branch matching stays ambiguous between " << param_ << "=" << xa << " and " << xb
            << " after " << opt_.max_refinement << " bisections";
        fail(Errc::branch_ambiguity, msg.str());
      }
    }
    ep_crossed = true;
    return assign(prev, cand, match_by_continuity(prev, cand));
  }

  int refinements() const { return refinements_; }

 private:
  std::vector<ResonanceState> candidates(double x, const std::vector<ResonanceState>& prev,
                                         const ResonanceSpectrum* cached, bool track) {
    const SystemModel m = model_.with_param(param_, x);
    std::vector<ResonanceState> out;
    if (m.energy_independent()) {
      const ResonanceSpectrum spec = cached ? *cached : diagonalize(build_h_eff(m, 0.0), opt_.fixed_point.diagonalize);
      for (std::size_t k = 0; k < spec.size(); ++k) out.push_back(state_from_spectrum(spec, k));
      return out;
    }
    for (const auto& p : prev) {
      FixedPointSeed seed{p.z, track ? p.eigvec : Eigen::VectorXcd()};
      out.push_back(solve_fixed_point(m, seed, opt_.fixed_point));
    }
    return out;
  }

  static std::vector<ResonanceState> assign(const std::vector<ResonanceState>& prev,
                                            const std::vector<ResonanceState>& cand,
                                            const std::vector<std::size_t>& assignment) {
    std::vector<ResonanceState> out(prev.size());
    for (std::size_t b = 0; b < prev.size(); ++b) {
      out[b] = cand[assignment[b]];
      out[b].branch_id = prev[b].branch_id;
    }
    return out;
  }

  const SystemModel& model_;
  std::string param_;
  const SweepOptions& opt_;
  int refinements_ = 0;
};

}  // namespace

SweepResult sweep(const SystemModel& model, const std::string& param, std::span<const double> grid,
                  const SweepOptions& options) {
  if (!model.control_params().contains(param))
    fail(Errc::invalid_input, "parameter '" + param + "' is not declared in control_params");
  if (grid.size() < 2) fail(Errc::invalid_input, "sweep grid needs at least 2 points");
  const bool increasing = grid[1] > grid[0];
  for (std::size_t k = 1; k < grid.size(); ++k)
    if (!(increasing ? grid[k] > grid[k - 1] : grid[k] < grid[k - 1]) || !std::isfinite(grid[k]))
      fail(Errc::invalid_input, "sweep grid must be strictly monotone");

  SweepResult result{model, param, std::vector<double>(grid.begin(), grid.end()), {}, {}, 0};

  // Energy-independent models: every grid point is one diagonalization and
  // can be computed up front in any order.
  std::vector<ResonanceSpectrum> cached;
  if (model.energy_independent()) {
    cached.resize(grid.size());
    parallel_for(grid.size(), options.threads, [&](std::size_t k) {
      cached[k] = diagonalize(build_h_eff(model.with_param(param, grid[k]), 0.0),
                              options.fixed_point.diagonalize);
    });
  }
  auto cached_at = [&](std::size_t k) -> const ResonanceSpectrum* {
    return cached.empty() ? nullptr : &cached[k];
  };

  Sweeper sweeper(model, param, options);
  result.points.push_back(sweeper.initial(grid[0], cached_at(0)));
  for (std::size_t k = 1; k < grid.size(); ++k) {
    bool crossed = false;
    result.points.push_back(
        sweeper.advance(grid[k - 1], result.points.back(), grid[k], cached_at(k), 0, crossed));
    if (crossed) result.ep_crossings.push_back(k);
  }
  result.refinements = sweeper.refinements();
  return result;
}

// ---------------------------------------------------------------------------
// exceptional points

PairProbe probe_pair(const SystemModel& model, cplx center, const FixedPointOptions& options) {
  if (model.levels() < 2) fail(Errc::invalid_input, "an exceptional point needs at least two levels");
  PairProbe probe;
  double energy = center.real();
  for (int it = 0; it < options.max_iterations; ++it) {
    const auto spec = diagonalize(build_h_eff(model, energy), options.diagonalize);
    std::vector<std::size_t> idx(spec.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return std::abs(spec.eigenvalues(static_cast<Eigen::Index>(a)) - center) <
             std::abs(spec.eigenvalues(static_cast<Eigen::Index>(b)) - center);
    });
    const auto i = static_cast<Eigen::Index>(std::min(idx[0], idx[1]));
    const auto j = static_cast<Eigen::Index>(std::max(idx[0], idx[1]));
    probe.energy = energy;
    probe.z1 = spec.eigenvalues(i);
    probe.z2 = spec.eigenvalues(j);
    probe.r1 = spec.phase_rigidity(i);
    probe.r2 = spec.phase_rigidity(j);
    probe.v1 = spec.right_eigenvectors.col(i);
    probe.v2 = spec.right_eigenvectors.col(j);
    const double residual = 0.5 * (probe.z1 + probe.z2).real() - energy;
    if (model.energy_independent() || std::abs(residual) <= options.tol_fp) break;
    energy += options.damping * residual;
  }
  return probe;
}

std::vector<ExceptionalPoint> find_exceptional_points(const SweepResult& sw, double sep_tol, double rig_tol) {
  if (sw.grid.size() < 3) fail(Errc::invalid_input, "EP detection needs at least 3 grid points");
  std::vector<ExceptionalPoint> found;
  const std::size_t nb = sw.branch_count();
  const std::size_t ng = sw.grid.size();

  for (std::size_t a = 0; a < nb; ++a) {
    for (std::size_t b = a + 1; b < nb; ++b) {
      std::vector<double> sep(ng);
      for (std::size_t k = 0; k < ng; ++k) sep[k] = std::abs(sw.points[k][a].z - sw.points[k][b].z);
      for (std::size_t k = 1; k + 1 < ng; ++k) {
        if (!(sep[k] <= sep[k - 1] && sep[k] <= sep[k + 1])) continue;
        if (sep[k] == sep[k - 1]) continue;  // plateau, counted once at its start

        const double lo = std::min(sw.grid[k - 1], sw.grid[k + 1]);
        const double hi = std::max(sw.grid[k - 1], sw.grid[k + 1]);
        const cplx center = 0.5 * (sw.points[k][a].z + sw.points[k][b].z);
        auto probe_at = [&](double x) { return probe_pair(sw.model.with_param(sw.param, x), center); };
        const auto best = numerics::golden_section_minimize(
            [&](double x) { return probe_at(x).separation(); }, lo, hi, 1e-13 * std::max(1.0, hi - lo), 400);
        const PairProbe p = probe_at(best.x);

        ExceptionalPoint ep;
        ep.param_value = best.x;
        ep.bracket_lo = lo;
        ep.bracket_hi = hi;
        ep.energy_value = 0.5 * (p.z1 + p.z2);
        ep.branch_pair = {static_cast<int>(a), static_cast<int>(b)};
        ep.min_separation = p.separation();
        ep.min_rigidity = std::min(p.r1, p.r2);
        const cplx i1(0.0, 1.0);
        const double n1 = std::max(p.v1.norm(), std::numeric_limits<double>::min());
        ep.coalescence_deviation =
            std::min((p.v1 - i1 * p.v2).norm(), (p.v1 + i1 * p.v2).norm()) / n1;
        if (ep.min_separation < sep_tol && ep.min_rigidity < rig_tol) found.push_back(ep);
      }
    }
  }
  std::stable_sort(found.begin(), found.end(), [](const ExceptionalPoint& x, const ExceptionalPoint& y) {
    return x.param_value < y.param_value;
  });
  return found;
}

}  // namespace resonance_lab
