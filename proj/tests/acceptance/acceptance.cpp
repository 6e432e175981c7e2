// Acceptance checks. Each criterion prints one PASS/FAIL line; the exit code
// is nonzero when the selected criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "resonance_lab/bic.hpp"
#include "resonance_lab/dynamics.hpp"
#include "resonance_lab/model_io.hpp"
#include "resonance_lab/numerics.hpp"
#include "resonance_lab/oracle.hpp"
#include "resonance_lab/scattering.hpp"
#include "resonance_lab/spectral.hpp"

using namespace resonance_lab;
namespace fs = std::filesystem;

namespace {

constexpr double pi = std::numbers::pi;

struct Outcome {
  bool passed = true;
  std::string detail;
  // a failed sub-check is recorded, later ones still run
  void expect(bool ok, const std::string& what) {
    if (!ok) passed = false;
    if (!detail.empty()) detail += "; ";
    detail += (ok ? "" : "FAILED ") + what;
  }
};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

std::string model_path(const char* name) { return std::string(RESONANCE_LAB_MODELS) + "/" + name; }

// Random H_B with channels of all three kinds; `overlap` scales couplings into
// the regime where widths exceed level spacings.
SystemModel random_model(std::mt19937_64& rng, int n, int c, double overlap, bool mixed) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXd hb(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) hb(i, j) = hb(j, i) = i == j ? 2.0 * u(rng) : 0.4 * u(rng);
  Eigen::MatrixXd v(n, c);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < c; ++k) v(i, k) = overlap * u(rng);
  std::vector<Channel> ch;
  for (int k = 0; k < c; ++k) {
    const int kind = mixed ? static_cast<int>(rng() % 3) : 0;
    if (kind == 0) ch.push_back(Channel::wideband(0.2 + 0.8 * std::abs(u(rng))));
    else if (kind == 1) ch.push_back(Channel::flatband(-3.0 + 0.5 * u(rng), 3.0 + 0.5 * u(rng), 0.5 + 0.5 * std::abs(u(rng))));
    else ch.push_back(Channel::chain_lead(-2.5 + 0.5 * u(rng), 0.8 + 0.4 * std::abs(u(rng))));
  }
  return SystemModel::from_values(hb, ch, v);
}

Outcome biorthogonality() {
  Outcome out;
  std::mt19937_64 rng(20261016);
  double worst_gram = 0.0, worst_a = 0.0, worst_b_two = 0.0, worst_b_many = 0.0, worst_r = 0.0;
  int models = 0, defective = 0;
  for (int trial = 0; trial < 64; ++trial) {
    const int n = 1 + trial % 8, c = 1 + trial % 3;
    const auto m = random_model(rng, n, c, 0.6, true);
    const auto s = diagonalize(build_h_eff(m, 0.37 * (trial % 5) - 0.7));
    ++models;
    if (s.defective) {
      ++defective;
      continue;
    }
    const Eigen::MatrixXcd& phi = s.right_eigenvectors;
    worst_gram = std::max(worst_gram, (phi.transpose() * phi - Eigen::MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff());
    worst_a = std::max(worst_a, 1.0 - s.a_diag.minCoeff());
    worst_r = std::max(worst_r, s.phase_rigidity.maxCoeff() - 1.0);
    double b = 0.0;
    for (int l = 0; l < n; ++l)
      for (int k = l + 1; k < n; ++k) b = std::max(b, std::abs(s.b_matrix(l, k) + s.b_matrix(k, l)));
    (n <= 2 ? worst_b_two : worst_b_many) = std::max(n <= 2 ? worst_b_two : worst_b_many, b);
  }
  out.expect(defective == 0, std::to_string(models) + " models, " + std::to_string(defective) + " defective");
  out.expect(worst_gram <= 1e-10, "bilinear orthonormality " + sci(worst_gram) + " <= 1e-10");
  out.expect(worst_a <= 1e-12, "A >= 1 (deficit " + sci(worst_a) + ")");
  out.expect(worst_r <= 1e-12, "r <= 1 (excess " + sci(worst_r) + ")");
  out.expect(worst_b_two <= 1e-10, "B antisymmetry N <= 2: " + sci(worst_b_two) + " <= 1e-10");
  out.expect(worst_b_many <= 1e-10, "B antisymmetry N >= 3: " + sci(worst_b_many) + " <= 1e-10");
  return out;
}

Outcome unitarity() {
  Outcome out;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-2.5, 2.5);
  double worst = 0.0;
  int overlapping = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const double scale = trial % 2 ? 1.5 : 0.3;
    const auto m = random_model(rng, 1 + trial % 8, 1 + trial % 3, scale, true);
    const double e = u(rng);
    const auto s = diagonalize(build_h_eff(m, e));
    if (s.defective) continue;
    double min_gap = 1e300, max_w = 0.0;
    for (std::size_t l = 0; l < s.size(); ++l) {
      max_w = std::max(max_w, s.width(l));
      for (std::size_t k = l + 1; k < s.size(); ++k)
        min_gap = std::min(min_gap, std::abs(s.eigenvalues(static_cast<Eigen::Index>(l)).real() -
                                             s.eigenvalues(static_cast<Eigen::Index>(k)).real()));
    }
    overlapping += max_w > min_gap;
    const auto sf = s_matrix_full(m, s, e);
    if (sf.rows() > 0) worst = std::max(worst, unitarity_residual(sf));
  }
  out.expect(worst <= 1e-8, "max ||S^+S - I|| = " + sci(worst) + " <= 1e-8 over 200 samples");
  out.expect(overlapping >= 20, std::to_string(overlapping) + " samples with overlapping resonances");
  return out;
}

Outcome width_sum_rule() {
  Outcome out;
  double worst = 0.0;
  auto check = [&](const SystemModel& base, const std::vector<double>& grid) {
    const auto sw = sweep(base, "g", grid);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const auto m = base.with_param("g", grid[k]);
      double want = 0.0;
      for (std::size_t c = 0; c < m.channel_count(); ++c)
        want += 2.0 * pi * m.channels()[c].dos_scale * m.couplings().col(static_cast<Eigen::Index>(c)).squaredNorm();
      double got = 0.0;
      for (const auto& st : sw.points[k]) got += st.gamma_lambda;
      worst = std::max(worst, std::abs(got - want) / want);
    }
  };
  check(load_model(model_path("trapping2.yaml")), numerics::linspace(0.01, 2.0, 200));
  check(load_model(model_path("saturation6.yaml")), numerics::linspace(0.01, 3.0, 300));
  check(load_model(model_path("level1.yaml")), numerics::linspace(0.01, 1.5, 150));
  out.expect(worst <= 1e-9, "max relative sum-rule deviation " + sci(worst) + " <= 1e-9");
  return out;
}

Outcome trapping_golden() {
  Outcome out;
  const auto m = load_model(model_path("trapping2.yaml"));
  const double d = 0.25;
  const auto grid = numerics::linspace(0.01, 1.0, 99);
  const auto sw = sweep(m, "g", grid);
  double worst = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double g = grid[k];
    const cplx root = std::sqrt(cplx(d * d - std::pow(g, 4), 0.0));
    const cplx a = cplx(0.0, -g * g) - root, b = cplx(0.0, -g * g) + root;
    const cplx z0 = sw.points[k][0].z, z1 = sw.points[k][1].z;
    worst = std::max(worst, std::min(std::max(std::abs(z0 - a), std::abs(z1 - b)),
                                     std::max(std::abs(z0 - b), std::abs(z1 - a))));
  }
  out.expect(worst <= 1e-10, "closed-form trajectories " + sci(worst) + " <= 1e-10");
  const auto eps = find_exceptional_points(sw);
  const double g_ep = std::sqrt(d);
  out.expect(eps.size() == 1, std::to_string(eps.size()) + " exceptional point(s)");
  if (!eps.empty())
    out.expect(std::abs(eps[0].param_value - g_ep) <= 1e-6,
               "g_EP = " + std::to_string(eps[0].param_value) + ", error " + sci(std::abs(eps[0].param_value - g_ep)));
  return out;
}

Outcome rigidity_collapse() {
  Outcome out;
  const auto m = load_model(model_path("trapping2.yaml"));
  std::vector<double> minima;
  std::string trail;
  double refined = 1.0;
  for (int level = 3; level <= 9; ++level) {
    // nested grids: each one contains the previous, none contains 0.5
    const auto grid = numerics::linspace(0.01, 1.0, (std::size_t{1} << level) + 1);
    const auto sw = sweep(m, "g", grid);
    double r = 1.0;
    for (const auto& row : sw.points)
      for (const auto& st : row) r = std::min(r, st.rigidity);
    minima.push_back(r);
    trail += (trail.empty() ? "" : " ") + sci(r);
    if (level == 9) {
      const auto eps = find_exceptional_points(sw);
      if (!eps.empty()) refined = eps[0].min_rigidity;
    }
  }
  out.expect(refined <= 1e-2, "EP-refined min r = " + sci(refined) + " <= 1e-2");
  bool decreasing = true;
  for (std::size_t i = 1; i < minima.size(); ++i) decreasing = decreasing && minima[i] <= minima[i - 1];
  out.expect(decreasing && minima.back() < minima.front(), "grid min r under refinement: " + trail);
  return out;
}

Outcome bic_golden() {
  Outcome out;
  const auto base = load_model(model_path("bic2.yaml"));
  const auto sw = sweep(base, "e2", numerics::linspace(-0.5, 0.5, 41));
  const auto found = find_bics(sw);
  const BicCandidate* c = nullptr;
  for (const auto& x : found)
    if (x.true_bic && (!c || x.width_at_min < c->width_at_min)) c = &x;
  out.expect(c != nullptr, std::to_string(found.size()) + " candidate(s)");
  if (!c) return out;

  out.expect(std::abs(c->width_at_min) <= 1e-12, "width_at_min " + sci(c->width_at_min) + " <= 1e-12");
  const double resid = *std::max_element(c->decoupling_residuals.begin(), c->decoupling_residuals.end());
  out.expect(resid <= 1e-8, "decoupling " + sci(resid) + " <= 1e-8");
  const auto m0 = base.with_param("e2", c->param_value);
  const double single = 2.0 * pi * m0.channels()[0].dos_scale * m0.couplings()(0, 0) * m0.couplings()(0, 0);
  out.expect(std::abs(c->partner_width - 2.0 * single) <= 1e-9 * 2.0 * single,
             "partner width / single-state width = " + std::to_string(c->partner_width / single));

  const auto report = verify_bic(*c, base);
  out.expect(std::abs(report.phase_jump - pi) <= 1e-3,
             "phase jump pi - " + sci(pi - report.phase_jump));
  for (const auto& chk : report.checks)
    if (!chk.passed) out.expect(false, "verify_bic " + chk.name + " = " + sci(chk.value));

  // oracle: the decoupled combination is a discrete eigenvector of the full space
  const auto full = build_full(m0, 1500, std::pair{-8.0, 8.0});
  Eigen::VectorXcd init = Eigen::VectorXcd::Zero(2);
  init(0) = 1.0;
  const double weight = std::norm(c->eigvec(0)) / c->eigvec.squaredNorm();
  const auto tr = survival_probability(full, init, numerics::linspace(0.0, 100.0, 201));
  double lo = 1.0, hi = 0.0;
  for (std::size_t j = 100; j < tr.times.size(); ++j) lo = std::min(lo, tr.survival[j]), hi = std::max(hi, tr.survival[j]);
  out.expect(hi - lo <= 1e-2 && std::abs(0.5 * (lo + hi) - weight * weight) <= 1e-2,
             "oracle plateau on t in [50, 100]: [" + sci(lo) + ", " + sci(hi) + "], expected " + sci(weight * weight));

  // broken reflection symmetry: two mirror leads with unequal couplings
  const auto asym = load_model(model_path("bic2_mirror.yaml")).with_param("a", 0.9);
  const auto sw2 = sweep(asym, "e2", numerics::linspace(-0.5, 0.5, 41));
  double min_width = 1e300;
  for (const auto& x : find_bics(sw2)) min_width = std::min(min_width, x.width_at_min);
  for (const auto& row : sw2.points)
    for (const auto& st : row) min_width = std::min(min_width, st.gamma_lambda);
  out.expect(min_width > 0.0 && min_width < 1e300, "asymmetric minimum width " + sci(min_width) + " > 0");
  return out;
}

Outcome decay_law() {
  Outcome out;
  const auto m = load_model(model_path("isolated1.yaml"));
  const auto st = solve_fixed_point(m, cplx(0.0, 0.0), 1e-12);
  const double gamma = st.gamma_lambda;
  const auto spec = diagonalize(build_h_eff(m, st.e_lambda));
  const auto times = numerics::linspace(0.0, 5.0 / gamma, 501);
  Eigen::VectorXcd c0 = Eigen::VectorXcd::Ones(1);
  const auto tr = evolve(spec, st.e_lambda, c0, times);
  const auto full = build_full(m, 2000);
  const auto orc = survival_probability(full, c0, times);
  double worst = 0.0;
  for (std::size_t j = 0; j < times.size(); ++j)
    worst = std::max(worst, std::abs(std::abs(tr.population[j]) - orc.survival[j]) / orc.survival[j]);
  out.expect(worst <= 0.02, "max relative deviation from oracle " + sci(worst) + " <= 2e-2 (Gamma = " + sci(gamma) + ")");
  double spread = 0.0;
  for (double k : tr.rate_analytic) spread = std::max(spread, std::abs(k - gamma) / gamma);
  for (std::size_t j = 2; j + 2 < tr.rate_numeric.size(); ++j)
    spread = std::max(spread, std::abs(tr.rate_numeric[j] - gamma) / gamma);
  out.expect(spread <= 1e-6, "k_gr constant, relative spread " + sci(spread) + " <= 1e-6");
  return out;
}

Outcome saturation() {
  Outcome out;
  const auto m = load_model(model_path("saturation6.yaml"));
  std::vector<double> grid;
  for (int k = 0; k <= 120; ++k) grid.push_back(0.01 * std::pow(10.0, k * 3.0 / 120.0));  // 0.01 .. 10
  const auto rows = average_rate_saturation(m, grid);
  std::size_t peak = 0;
  for (std::size_t k = 1; k < rows.size(); ++k)
    if (rows[k].k_av > rows[peak].k_av) peak = k;
  bool rising = true;
  for (std::size_t k = 1; k <= peak; ++k) rising = rising && rows[k].k_av > rows[k - 1].k_av;
  const std::size_t top = rows.size() - 41;  // last decade, g in [1, 10]
  bool flat = true;
  for (std::size_t k = top + 1; k < rows.size(); ++k) flat = flat && rows[k].k_av <= rows[k - 1].k_av * (1.0 + 1e-12);
  out.expect(rising && peak > 0, "k_av rises to its maximum " + sci(rows[peak].k_av) + " at g = " + sci(rows[peak].g));
  out.expect(flat, "non-increasing over g in [1, 10], k_av(10) = " + sci(rows.back().k_av));
  out.expect(rows.back().gamma_max > 10.0 * rows.back().k_av, "the collective state carries the coupling");
  return out;
}

Outcome transmission_routes() {
  Outcome out;
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  double worst = 0.0;
  int samples = 0;
  while (samples < 100) {
    const auto m = random_model(rng, 1 + samples % 6, 2 + samples % 2, samples % 2 ? 1.2 : 0.4, true);
    const double e = u(rng);
    const auto open = open_channels(m, e);
    if (open.size() < 2) continue;
    const auto s = diagonalize(build_h_eff(m, e));
    if (s.defective) continue;
    const cplx a = transmission_pole_sum(m, s, e, open[0], open[1]);
    const cplx b = transmission_wave(m, s, e, open[0], open[1]);
    worst = std::max(worst, std::abs(a - b) / std::max(std::abs(a), 1e-300));
    ++samples;
  }
  out.expect(worst <= 1e-9, "max relative difference " + sci(worst) + " <= 1e-9 over 100 samples");
  return out;
}

Outcome anticorrelation() {
  Outcome out;
  const auto m = load_model(model_path("crossover4.yaml"));
  const auto grid = numerics::linspace(-2.5, 2.5, 501);
  const auto pts = scan(m, grid, 0);
  std::vector<double> t, rho;
  for (const auto& p : pts) {
    t.push_back(std::abs(p.transmission(1, 0)));
    rho.push_back(p.rho);
  }
  const double r = numerics::pearson(t, rho);
  out.expect(r <= -0.5, "Pearson corr(|t|, rho) = " + std::to_string(r) + " <= -0.5");
  return out;
}

bool same_bytes(const fs::path& a, const fs::path& b) {
  std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
  if (!fa || !fb) return false;
  return std::equal(std::istreambuf_iterator<char>(fa), {}, std::istreambuf_iterator<char>(fb), {});
}

Outcome determinism(const std::string& cli, const fs::path& work) {
  Outcome out;
  if (cli.empty()) {
    out.expect(false, "--cli not given");
    return out;
  }
  struct Case {
    const char* name;
    std::string args;
  };
  const std::vector<Case> cases{
      {"trapping2", "sweep --model " + model_path("trapping2.yaml") + " --param g --from 0.01 --to 1.0 --steps 98"},
      {"saturation6", "sweep --model " + model_path("saturation6.yaml") + " --param g --from 0.01 --to 2 --steps 200"},
      {"threshold2", "sweep --model " + model_path("threshold2.yaml") + " --param e1 --from -0.5 --to 1.0 --steps 61"},
  };
  for (const auto& c : cases) {
    for (int threads : {1, 8}) {
      const fs::path dir = work / (std::string(c.name) + "_t" + std::to_string(threads));
      fs::remove_all(dir);
      const std::string cmd = "\"" + cli + "\" " + c.args + " --threads " + std::to_string(threads) + " --out \"" +
                              dir.string() + "\" > /dev/null";
      const int rc = std::system(cmd.c_str());
      if (rc != 0) out.expect(false, std::string(c.name) + ": CLI exited with " + std::to_string(rc));
    }
    bool same = true;
    for (const char* f : {"sweep.csv", "eps.json"})
      same = same && same_bytes(work / (std::string(c.name) + "_t1") / f, work / (std::string(c.name) + "_t8") / f);
    out.expect(same, std::string(c.name) + " byte-identical at --threads 1 vs 8");
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  int criterion = 0;
  std::string cli;
  std::string work = fs::temp_directory_path() / "resonance_lab_acceptance";
  app.add_option("--criterion", criterion, "criterion number, 0 for all")->check(CLI::Range(0, 11));
  app.add_option("--cli", cli, "resonance_lab executable");
  app.add_option("--work", work, "scratch directory");
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(work);

  struct Entry {
    int id;
    const char* name;
    double budget_s;  // 0: no limit
    std::function<Outcome()> run;
  };
  const std::vector<Entry> entries{
      {1, "biorthogonality", 10.0, biorthogonality},
      {2, "unitarity", 30.0, unitarity},
      {3, "width sum rule", 0.0, width_sum_rule},
      {4, "trapping golden case", 5.0, trapping_golden},
      {5, "phase-rigidity collapse", 10.0, rigidity_collapse},
      {6, "BIC golden case", 20.0, bic_golden},
      {7, "decay law vs oracle", 60.0, decay_law},
      {8, "average-rate saturation", 30.0, saturation},
      {9, "transmission routes", 0.0, transmission_routes},
      {10, "transmission/rigidity anticorrelation", 30.0, anticorrelation},
      {11, "CLI determinism", 0.0, [&] { return determinism(cli, work); }},
  };

  bool all = true;
  for (const auto& e : entries) {
    if (criterion != 0 && e.id != criterion) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = e.run();
    } catch (const std::exception& ex) {
      o.expect(false, std::string("exception: ") + ex.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (e.budget_s > 0.0) o.expect(secs < e.budget_s, "runtime " + std::to_string(secs).substr(0, 5) + " s < " +
                                                          std::to_string(static_cast<int>(e.budget_s)) + " s");
    std::printf("criterion %2d %-40s %s  %s\n", e.id, e.name, o.passed ? "PASS" : "FAIL", o.detail.c_str());
    all = all && o.passed;
  }
  return all ? 0 : 1;
}
