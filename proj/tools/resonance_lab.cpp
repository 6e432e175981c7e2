#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "CLI11.hpp"
#include "json.hpp"

#include "artifacts.hpp"
#include "resonance_lab/bic.hpp"
#include "resonance_lab/dynamics.hpp"
#include "resonance_lab/error.hpp"
#include "resonance_lab/kernels.hpp"
#include "resonance_lab/model_io.hpp"
#include "resonance_lab/numerics.hpp"
#include "resonance_lab/oracle.hpp"
#include "resonance_lab/scattering.hpp"
#include "resonance_lab/spectral.hpp"

namespace fs = std::filesystem;
namespace rl = resonance_lab;
using json = nlohmann::ordered_json;
using rl::cli::CsvWriter;

namespace {

struct RunConfig {
  std::string command;
  std::string model_path;
  std::string output_dir = ".";
  std::vector<std::string> sets;  // NAME=VALUE overrides
  std::string param;
  double from = 0.0, to = 0.0;
  std::size_t steps = 0;
  double energy_from = 0.0, energy_to = 0.0;
  std::size_t energy_steps = 0;
  double energy = 0.0;
  std::size_t channel = 0;
  double tol_fp = 1e-10, tol_width = 1e-10, tol_sep = 1e-3, tol_rig = 0.1;
  unsigned threads = 1;
  std::uint64_t seed = 1;
  std::vector<double> window;
  std::size_t bins = 2000;
  std::size_t level = 0;
  double t_max = 100.0;
  std::size_t t_steps = 1001;
  std::size_t gen_levels = 4, gen_channels = 2;
};

struct Invariant {
  std::string name;
  bool passed;
  double value;
  double threshold;
};

class Run {
 public:
  explicit Run(const RunConfig& cfg) : cfg_(cfg) {}

  void check(std::string name, double value, double threshold) {
    invariants_.push_back({std::move(name), std::isfinite(value) && value <= threshold, value, threshold});
  }
  void artifact(const std::string& name) { artifacts_.push_back(name); }
  void warn(const std::string& w) { warnings_.push_back(w); }
  json& extra() { return extra_; }
  fs::path path(const std::string& name) const { return fs::path(cfg_.output_dir) / name; }

  bool all_passed() const {
    for (const auto& i : invariants_)
      if (!i.passed) return false;
    return true;
  }

  void write_manifest(double wall_seconds) const {
    json m;
    m["command"] = cfg_.command;
    m["version"] = RESONANCE_LAB_VERSION;
    m["simd"] = rl::kernels::to_string(rl::kernels::active_isa());
    json c;
    c["model"] = cfg_.model_path;
    c["out"] = cfg_.output_dir;
    c["set"] = cfg_.sets;
    if (!cfg_.param.empty()) c["param"] = {{"name", cfg_.param}, {"from", cfg_.from}, {"to", cfg_.to}, {"steps", cfg_.steps}};
    if (cfg_.energy_steps) c["energy_grid"] = {{"from", cfg_.energy_from}, {"to", cfg_.energy_to}, {"steps", cfg_.energy_steps}};
    c["energy"] = cfg_.energy;
    c["channel"] = cfg_.channel;
    c["tolerances"] = {{"tol_fp", cfg_.tol_fp}, {"tol_width", cfg_.tol_width}, {"tol_sep", cfg_.tol_sep}, {"tol_rig", cfg_.tol_rig}};
    c["threads"] = cfg_.threads;
    c["seed"] = cfg_.seed;
    if (!cfg_.window.empty()) c["window"] = cfg_.window;
    c["bins"] = cfg_.bins;
    c["time_grid"] = {{"t_max", cfg_.t_max}, {"steps", cfg_.t_steps}};
    m["config"] = c;
    m["wall_time_s"] = wall_seconds;
    json inv = json::array();
    for (const auto& i : invariants_)
      inv.push_back({{"name", i.name}, {"passed", i.passed}, {"value", std::isfinite(i.value) ? json(i.value) : json(nullptr)},
                     {"threshold", i.threshold}});
    m["invariants"] = inv;
    m["all_passed"] = all_passed();
    m["artifacts"] = artifacts_;
    m["warnings"] = warnings_;
    if (!extra_.is_null()) m["results"] = extra_;
    std::ofstream out(path("manifest.json"));
    out << m.dump(2) << '\n';
  }

 private:
  const RunConfig& cfg_;
  std::vector<Invariant> invariants_;
  std::vector<std::string> artifacts_;
  std::vector<std::string> warnings_;
  json extra_;
};

rl::SystemModel load(const RunConfig& cfg) {
  rl::SystemModel model = rl::load_model(cfg.model_path);
  rl::ParamMap overrides;
  for (const auto& s : cfg.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw rl::Error("cli", rl::Errc::invalid_input, "--set expects NAME=VALUE, got '" + s + "'");
    overrides[s.substr(0, eq)] = rl::Expr::parse(s.substr(eq + 1)).evaluate({});
  }
  return overrides.empty() ? model : model.with_params(overrides);
}

std::vector<double> param_grid(const RunConfig& cfg) {
  if (cfg.param.empty()) throw rl::Error("cli", rl::Errc::invalid_input, "--param is required");
  if (cfg.steps < 2) throw rl::Error("cli", rl::Errc::invalid_input, "--steps must be >= 2");
  if (!(cfg.from != cfg.to)) throw rl::Error("cli", rl::Errc::invalid_input, "--from and --to must differ");
  return rl::numerics::linspace(cfg.from, cfg.to, cfg.steps);
}

rl::SweepOptions sweep_options(const RunConfig& cfg) {
  rl::SweepOptions opt;
  opt.fixed_point.tol_fp = cfg.tol_fp;
  opt.threads = cfg.threads;
  return opt;
}

double width_sum_target(const rl::SystemModel& m) {
  double sum = 0.0;
  for (std::size_t c = 0; c < m.channel_count(); ++c)
    sum += m.channels()[c].dos_scale * m.couplings().col(static_cast<Eigen::Index>(c)).squaredNorm();
  return 2.0 * std::numbers::pi * sum;
}

// sweep.csv plus the invariants every sweep shares.
void write_sweep(Run& run, const rl::SweepResult& sw) {
  CsvWriter csv(run.path("sweep.csv"), {"param", "branch_id", "E_lambda", "Gamma_lambda", "r_lambda", "A_lambda", "converged"});
  for (std::size_t k = 0; k < sw.grid.size(); ++k)
    for (const auto& s : sw.points[k])
      csv.row(sw.grid[k], s.branch_id, s.e_lambda, s.gamma_lambda, s.rigidity, s.a_lambda, s.converged);
  run.artifact("sweep.csv");

  double min_width = 0.0, worst_sum = 0.0, worst_continuity = 0.0;
  bool all_converged = true;
  for (std::size_t k = 0; k < sw.grid.size(); ++k) {
    double gsum = 0.0;
    for (const auto& s : sw.points[k]) {
      min_width = std::min(min_width, s.gamma_lambda);
      all_converged = all_converged && s.converged;
      gsum += s.gamma_lambda;
    }
    const auto m = sw.model.with_param(sw.param, sw.grid[k]);
    if (m.energy_independent()) {
      const double target = width_sum_target(m);
      worst_sum = std::max(worst_sum, std::abs(gsum - target) / std::max(target, 1e-300));
    }
    const bool crossed = std::find(sw.ep_crossings.begin(), sw.ep_crossings.end(), k) != sw.ep_crossings.end();
    if (k > 0 && !crossed)
      for (std::size_t b = 0; b < sw.points[k].size(); ++b)
        worst_continuity = std::max(worst_continuity,
                                    1.0 - rl::bilinear_overlap(sw.points[k - 1][b].eigvec, sw.points[k][b].eigvec));
  }
  run.check("widths_nonnegative", -min_width, 1e-12);
  run.check("fixed_points_converged", all_converged ? 0.0 : 1.0, 0.0);
  if (sw.model.energy_independent()) run.check("width_sum_rule_rel", worst_sum, 1e-9);
  run.check("branch_continuity_deficit", worst_continuity, 0.5);
}

json ep_json(const rl::ExceptionalPoint& ep) {
  return {{"param_value", ep.param_value},
          {"bracket", {ep.bracket_lo, ep.bracket_hi}},
          {"energy", {{"re", ep.energy_value.real()}, {"im", ep.energy_value.imag()}}},
          {"branch_pair", {ep.branch_pair.first, ep.branch_pair.second}},
          {"min_separation", ep.min_separation},
          {"min_rigidity", ep.min_rigidity},
          {"coalescence_deviation", ep.coalescence_deviation}};
}

void cmd_spectrum(const RunConfig& cfg, Run& run) {
  const auto model = load(cfg);
  const auto spec = rl::diagonalize(rl::build_h_eff(model, cfg.energy));
  CsvWriter csv(run.path("spectrum.csv"), {"index", "re_z", "im_z", "Gamma", "r_lambda", "A_lambda", "defective"});
  double min_a = 1.0, max_r = 0.0, min_width = 0.0;
  for (std::size_t k = 0; k < spec.size(); ++k) {
    const auto ki = static_cast<Eigen::Index>(k);
    csv.row(k, spec.eigenvalues(ki).real(), spec.eigenvalues(ki).imag(), spec.width(k), spec.phase_rigidity(ki),
            spec.a_diag(ki), static_cast<bool>(spec.defective_mask[k]));
    min_a = std::min(min_a, spec.a_diag(ki));
    max_r = std::max(max_r, spec.phase_rigidity(ki));
    min_width = std::min(min_width, spec.width(k));
  }
  run.artifact("spectrum.csv");
  if (!spec.defective) {
    const auto n = static_cast<Eigen::Index>(spec.size());
    const double biorth = (spec.right_eigenvectors.transpose() * spec.right_eigenvectors -
                           Eigen::MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff();
    run.check("biorthonormality", biorth, 1e-10);
  } else {
    run.warn("spectrum is defective at this energy (exceptional point)");
  }
  run.check("A_at_least_one", 1.0 - min_a, 1e-12);
  run.check("rigidity_at_most_one", max_r - 1.0, 1e-12);
  run.check("widths_nonnegative", -min_width, 1e-12);

  // fixed-point states seeded from the closed-system levels
  CsvWriter states(run.path("states.csv"), {"branch_id", "E_lambda", "Gamma_lambda", "r_lambda", "A_lambda", "converged", "iterations"});
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> closed(model.hb());
  rl::FixedPointOptions fp;
  fp.tol_fp = cfg.tol_fp;
  double worst_fp = 0.0;
  for (Eigen::Index i = 0; i < closed.eigenvalues().size(); ++i) {
    const auto st = rl::solve_fixed_point(
        model, rl::FixedPointSeed{closed.eigenvalues()(i), closed.eigenvectors().col(i).cast<rl::cplx>()}, fp);
    states.row(static_cast<int>(i), st.e_lambda, st.gamma_lambda, st.rigidity, st.a_lambda, st.converged, st.iterations);
    worst_fp = std::max(worst_fp, st.converged ? std::abs(st.e_lambda - st.z.real()) : INFINITY);
  }
  run.artifact("states.csv");
  run.check("fixed_point_residual", worst_fp, cfg.tol_fp);
}

void cmd_sweep(const RunConfig& cfg, Run& run) {
  const auto model = load(cfg);
  const auto grid = param_grid(cfg);
  const auto sw = rl::sweep(model, cfg.param, grid, sweep_options(cfg));
  write_sweep(run, sw);
  const auto eps = rl::find_exceptional_points(sw, cfg.tol_sep, cfg.tol_rig);
  json list = json::array();
  for (const auto& ep : eps) list.push_back(ep_json(ep));
  json doc = {{"param", cfg.param}, {"sep_tol", cfg.tol_sep}, {"rig_tol", cfg.tol_rig}, {"exceptional_points", list}};
  std::ofstream(run.path("eps.json")) << doc.dump(2) << '\n';
  run.artifact("eps.json");
  run.extra()["exceptional_points"] = eps.size();
  run.extra()["ep_crossings"] = sw.ep_crossings.size();
  run.extra()["refinements"] = sw.refinements;
}

void cmd_scan(const RunConfig& cfg, Run& run) {
  const auto model = load(cfg);
  if (cfg.energy_steps < 2) throw rl::Error("cli", rl::Errc::invalid_input, "--energy-steps must be >= 2");
  const auto energies = rl::numerics::linspace(cfg.energy_from, cfg.energy_to, cfg.energy_steps);
  const auto points = rl::scan(model, energies, cfg.channel, cfg.threads);

  const std::size_t c_count = model.channel_count();
  std::vector<std::string> header{"energy"};
  for (std::size_t a = 0; a < c_count; ++a)
    for (std::size_t b = 0; b < c_count; ++b) {
      const auto tag = std::to_string(a) + "_" + std::to_string(b);
      header.push_back("S" + tag + "_abs2");
      header.push_back("S" + tag + "_arg");
      if (a != b) header.push_back("t" + tag + "_abs2");
    }
  for (const char* h : {"rho", "theta", "phase", "unitarity"}) header.emplace_back(h);
  CsvWriter csv(run.path("scan.csv"), header);

  double worst_unitarity = 0.0, worst_rho = 0.0;
  for (const auto& p : points) {
    std::vector<double> row{p.energy};
    // full-size S with closed channels left at zero
    Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(c_count), static_cast<Eigen::Index>(c_count));
    for (std::size_t a = 0; a < p.open.size(); ++a)
      for (std::size_t b = 0; b < p.open.size(); ++b)
        s(static_cast<Eigen::Index>(p.open[a]), static_cast<Eigen::Index>(p.open[b])) =
            p.s_full(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
    for (std::size_t a = 0; a < c_count; ++a)
      for (std::size_t b = 0; b < c_count; ++b) {
        const auto ai = static_cast<Eigen::Index>(a), bi = static_cast<Eigen::Index>(b);
        row.push_back(std::norm(s(ai, bi)));
        row.push_back(std::arg(s(ai, bi)));
        if (a != b) row.push_back(std::norm(p.transmission(ai, bi)));
      }
    row.insert(row.end(), {p.rho, p.theta, p.phase, p.unitarity});
    csv.row(row);
    worst_unitarity = std::max(worst_unitarity, p.unitarity);
    if (std::isfinite(p.rho)) worst_rho = std::max({worst_rho, p.rho - 1.0, -p.rho});
  }
  run.artifact("scan.csv");
  run.check("unitarity_max_residual", worst_unitarity, 1e-8);
  run.check("rho_in_unit_interval", worst_rho, 1e-12);
}

void cmd_trace(const RunConfig& cfg, Run& run) {
  const auto model = load(cfg);
  if (cfg.t_steps < 2 || !(cfg.t_max > 0.0)) throw rl::Error("cli", rl::Errc::invalid_input, "need --t-max > 0 and --t-steps >= 2");
  const auto spec = rl::diagonalize(rl::build_h_eff(model, cfg.energy));
  const auto c0 = rl::excitation_coefficients(model, spec, cfg.energy, cfg.channel);
  const auto times = rl::numerics::linspace(0.0, cfg.t_max, cfg.t_steps);
  const auto tr = rl::evolve(spec, cfg.energy, c0, times);

  CsvWriter csv(run.path("trace.csv"), {"t", "re_population", "im_population", "abs2_population", "k_analytic", "k_numeric", "q_norm"});
  for (std::size_t j = 0; j < tr.times.size(); ++j)
    csv.row(tr.times[j], tr.population[j].real(), tr.population[j].imag(), std::norm(tr.population[j]),
            tr.rate_analytic[j], tr.rate_numeric[j], tr.q_norm[j]);
  run.artifact("trace.csv");
  if (tr.truncated) run.warn("population fell below 1e-300; trace truncated");

  double gmin = INFINITY, gmax = -INFINITY;
  for (Eigen::Index l = 0; l < c0.size(); ++l)
    if (std::norm(c0(l)) > 0.0) {
      gmin = std::min(gmin, tr.gammas[static_cast<std::size_t>(l)]);
      gmax = std::max(gmax, tr.gammas[static_cast<std::size_t>(l)]);
    }
  double envelope = 0.0, monotone = 0.0;
  for (std::size_t j = 0; j < tr.times.size(); ++j) {
    envelope = std::max({envelope, gmin - tr.rate_analytic[j], tr.rate_analytic[j] - gmax});
    if (j > 0) monotone = std::max(monotone, std::abs(tr.population[j]) - std::abs(tr.population[j - 1]));
  }
  run.check("rate_fd_agreement_rel", tr.rate_agreement, 1e-6);
  run.check("rate_within_width_envelope", envelope, 1e-8);
  run.check("population_nonincreasing", monotone, 1e-10);
}

void cmd_bic(const RunConfig& cfg, Run& run) {
  const auto model = load(cfg);
  const auto grid = param_grid(cfg);
  const auto sw = rl::sweep(model, cfg.param, grid, sweep_options(cfg));
  write_sweep(run, sw);
  const auto bics = rl::find_bics(sw, cfg.tol_width);

  json list = json::array();
  double worst_inequality = 0.0, worst_decoupling = 0.0;
  for (const auto& b : bics) {
    json j = {{"param_value", b.param_value},
              {"energy", b.energy},
              {"width_at_min", b.width_at_min},
              {"branch_id", b.branch_id},
              {"partner_branch", b.partner_branch},
              {"partner_width", b.partner_width},
              {"true_bic", b.true_bic},
              {"decoupling_residuals", b.decoupling_residuals},
              {"width_inequality", b.width_inequality},
              {"width_inequality_slack", b.width_inequality_slack},
              {"coupling_pattern", b.coupling_pattern}};
    worst_inequality = std::max(worst_inequality, -b.width_inequality_slack);
    if (b.true_bic) {
      const auto report = rl::verify_bic(b, model);
      json checks = json::array();
      for (const auto& c : report.checks)
        checks.push_back({{"name", c.name}, {"passed", c.passed},
                          {"value", std::isfinite(c.value) ? json(c.value) : json(nullptr)},
                          {"threshold", c.threshold}, {"detail", c.detail}});
      j["verification"] = {{"passed", report.passed()}, {"phase_jump", std::isfinite(report.phase_jump) ? json(report.phase_jump) : json(nullptr)},
                           {"near_param", report.near_param}, {"near_width", report.near_width}, {"checks", checks}};
      for (double r : b.decoupling_residuals) worst_decoupling = std::max(worst_decoupling, r);
    }
    list.push_back(j);
  }
  json doc = {{"param", cfg.param}, {"width_tol", cfg.tol_width}, {"candidates", list}};
  std::ofstream(run.path("bic.json")) << doc.dump(2) << '\n';
  run.artifact("bic.json");
  run.check("width_inequality_violation", worst_inequality, 1e-10);
  run.check("true_bic_decoupling", worst_decoupling, 1e-8);
  run.extra()["candidates"] = bics.size();
}

void cmd_oracle(const RunConfig& cfg, Run& run) {
  const auto model = load(cfg);
  std::optional<std::pair<double, double>> window;
  if (!cfg.window.empty()) {
    if (cfg.window.size() != 2) throw rl::Error("cli", rl::Errc::invalid_input, "--window expects LO HI");
    window = std::make_pair(cfg.window[0], cfg.window[1]);
  }
  if (cfg.level >= model.levels()) throw rl::Error("cli", rl::Errc::invalid_input, "--level out of range");
  if (cfg.t_steps < 2 || !(cfg.t_max > 0.0)) throw rl::Error("cli", rl::Errc::invalid_input, "need --t-max > 0 and --t-steps >= 2");
  const auto full = rl::build_full(model, cfg.bins, window);
  for (const auto& w : full.warnings) run.warn(w);

  Eigen::VectorXcd init = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(model.levels()));
  init(static_cast<Eigen::Index>(cfg.level)) = 1.0;
  const auto times = rl::numerics::linspace(0.0, cfg.t_max, cfg.t_steps);
  const auto tr = rl::survival_probability(full, init, times);
  if (tr.recurrence_warning) run.warn("t_max exceeds the recurrence time 2 pi / d_omega of the discretized continuum");

  CsvWriter csv(run.path("oracle.csv"), {"t", "survival", "q_population", "re_amplitude", "im_amplitude"});
  double worst_q = 0.0;
  for (std::size_t j = 0; j < tr.times.size(); ++j) {
    csv.row(tr.times[j], tr.survival[j], tr.q_population[j], tr.amplitude[j].real(), tr.amplitude[j].imag());
    worst_q = std::max(worst_q, tr.q_population[j] - 1.0);
  }
  run.artifact("oracle.csv");
  run.check("survival_at_t0", std::abs(tr.survival[0] - 1.0), 1e-12);
  run.check("q_population_at_most_one", worst_q, 1e-12);
  run.extra()["dim"] = full.dim;
  run.extra()["bin_spacing"] = full.spacing;
  run.extra()["recurrence_time"] = full.recurrence_time();
  run.extra()["lowest_eigenvalue"] = rl::lowest_eigenvalue(full);
}

void cmd_generate(const RunConfig& cfg, Run& run) {
  if (cfg.gen_levels < 1 || cfg.gen_channels < 1) throw rl::Error("cli", rl::Errc::invalid_input, "--levels and --channels must be >= 1");
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const auto n = static_cast<Eigen::Index>(cfg.gen_levels);
  Eigen::MatrixXd hb(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i; j < n; ++j) hb(i, j) = hb(j, i) = unit(rng);
  Eigen::MatrixXd g(n, static_cast<Eigen::Index>(cfg.gen_channels));
  for (Eigen::Index i = 0; i < g.size(); ++i) g(i) = 0.5 * unit(rng);
  std::vector<rl::Channel> channels(cfg.gen_channels, rl::Channel::wideband(1.0 / std::numbers::pi));
  const auto model = rl::SystemModel::from_values(hb, channels, g);
  std::ofstream(run.path("model.yaml")) << rl::dump_model(model);
  run.artifact("model.yaml");
}

unsigned default_threads() {
  if (const char* env = std::getenv("RESONANCE_LAB_THREADS")) {
    try {
      const int v = std::stoi(env);
      if (v >= 1) return static_cast<unsigned>(v);
    } catch (...) {
    }
    std::cerr << "warning: ignoring RESONANCE_LAB_THREADS='" << env << "'\n";
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;
  cfg.threads = default_threads();

  CLI::App app{"resonance_lab: resonances of open quantum systems from a non-Hermitian effective Hamiltonian"};
  app.require_subcommand(1);
  app.set_version_flag("--version", RESONANCE_LAB_VERSION);

  auto common = [&](CLI::App* sub, bool needs_model) {
    auto* m = sub->add_option("--model", cfg.model_path, "model definition file (YAML)");
    if (needs_model) m->required()->check(CLI::ExistingFile);
    sub->add_option("--out", cfg.output_dir, "output directory")->capture_default_str();
    sub->add_option("--set", cfg.sets, "override a control parameter, NAME=VALUE");
    sub->add_option("--threads", cfg.threads, "worker threads (fallback: RESONANCE_LAB_THREADS)")->check(CLI::PositiveNumber);
    sub->add_option("--tol-fp", cfg.tol_fp, "fixed-point tolerance")->check(CLI::PositiveNumber)->capture_default_str();
  };
  auto param_grid_opts = [&](CLI::App* sub) {
    sub->add_option("--param", cfg.param, "control parameter to sweep")->required();
    sub->add_option("--from", cfg.from, "first value")->required();
    sub->add_option("--to", cfg.to, "last value")->required();
    sub->add_option("--steps", cfg.steps, "number of grid points (>= 2)")->required();
  };

  auto* spectrum = app.add_subcommand("spectrum", "eigenpairs of H_eff(E) and fixed-point states");
  common(spectrum, true);
  spectrum->add_option("--energy", cfg.energy, "evaluation energy E")->capture_default_str();

  auto* sweep = app.add_subcommand("sweep", "branch trajectories over a parameter grid, exceptional points");
  common(sweep, true);
  param_grid_opts(sweep);
  sweep->add_option("--tol-sep", cfg.tol_sep, "EP eigenvalue separation threshold")->check(CLI::PositiveNumber)->capture_default_str();
  sweep->add_option("--tol-rig", cfg.tol_rig, "EP phase-rigidity threshold")->check(CLI::PositiveNumber)->capture_default_str();

  auto* scan = app.add_subcommand("scan", "S-matrix, transmission and phase rigidity over an energy grid");
  common(scan, true);
  scan->add_option("--energy-from", cfg.energy_from)->required();
  scan->add_option("--energy-to", cfg.energy_to)->required();
  scan->add_option("--energy-steps", cfg.energy_steps)->required();
  scan->add_option("--channel", cfg.channel, "incoming channel for the internal wave function")->capture_default_str();

  auto* trace = app.add_subcommand("trace", "population and decay rate of a scattering-excited state");
  common(trace, true);
  trace->add_option("--energy", cfg.energy, "scattering energy E")->capture_default_str();
  trace->add_option("--channel", cfg.channel, "exciting channel")->capture_default_str();
  trace->add_option("--t-max", cfg.t_max)->capture_default_str();
  trace->add_option("--t-steps", cfg.t_steps)->capture_default_str();

  auto* bic = app.add_subcommand("bic", "bound states in the continuum along a parameter sweep");
  common(bic, true);
  param_grid_opts(bic);
  bic->add_option("--tol-width", cfg.tol_width, "width below which a minimum is a true BIC")->check(CLI::PositiveNumber)->capture_default_str();

  auto* oracle = app.add_subcommand("oracle", "survival probability in the discretized full space");
  common(oracle, true);
  oracle->add_option("--bins", cfg.bins, "continuum bins per channel")->capture_default_str();
  oracle->add_option("--window", cfg.window, "LO HI truncation of WIDEBAND channels")->expected(2);
  oracle->add_option("--level", cfg.level, "initial level index")->capture_default_str();
  oracle->add_option("--t-max", cfg.t_max)->capture_default_str();
  oracle->add_option("--t-steps", cfg.t_steps)->capture_default_str();

  auto* generate = app.add_subcommand("generate", "write a seeded random WIDEBAND model");
  common(generate, false);
  generate->add_option("--seed", cfg.seed)->capture_default_str();
  generate->add_option("--levels", cfg.gen_levels)->capture_default_str();
  generate->add_option("--channels", cfg.gen_channels)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  for (auto* sub : app.get_subcommands()) cfg.command = sub->get_name();
  const auto start = std::chrono::steady_clock::now();
  Run run(cfg);
  try {
    fs::create_directories(cfg.output_dir);
    if (cfg.command == "spectrum") cmd_spectrum(cfg, run);
    else if (cfg.command == "sweep") cmd_sweep(cfg, run);
    else if (cfg.command == "scan") cmd_scan(cfg, run);
    else if (cfg.command == "trace") cmd_trace(cfg, run);
    else if (cfg.command == "bic") cmd_bic(cfg, run);
    else if (cfg.command == "oracle") cmd_oracle(cfg, run);
    else if (cfg.command == "generate") cmd_generate(cfg, run);
  } catch (const rl::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == rl::Errc::internal_consistency ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  run.write_manifest(wall);
  if (!run.all_passed()) {
    std::cerr << "invariant check failed; see " << run.path("manifest.json").string() << '\n';
    return 2;
  }
  return 0;
}
