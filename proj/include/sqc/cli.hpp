// Scenario runners behind the command-line front end: each scenario consumes
// a strict Settings schema, writes CSV artifacts plus a JSON manifest into
// its output directory, and reports scalar metrics for the summary report.
#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sqc/angular.hpp"
#include "sqc/catcode.hpp"
#include "sqc/config.hpp"
#include "sqc/dynamics.hpp"
#include "sqc/grape.hpp"
#include "sqc/models.hpp"
#include "sqc/threshold.hpp"

namespace sqc {

namespace scenarios {

struct Context {
  const Settings& settings;
  std::filesystem::path out_dir;
  ResultManifest& manifest;

  void emit_csv(const std::string& name, const CsvTable& table) const {
    write_csv(out_dir / name, table);
    manifest.artifacts.push_back(name);
  }
};

// Exact counting tables: free parameters of the symmetric two-qudecimal
// isometries and minimum layer counts of the layered entangling ansatz.
inline void run_tables(const Context& ctx) {
  CsvTable table;
  table.header = {"table", "entry", "value"};
  const long D = symmetric_dim(10);
  for (long d : {2L, 3L, 5L, 7L}) {
    const long value = min_parameters(symmetric_dim(d), D);
    table.rows.push_back({"min_parameters", "sym_d" + std::to_string(d), csv_number(double(value))});
    ctx.manifest.metrics["min_parameters_sym_d" + std::to_string(d)] = double(value);
  }
  for (long d : {3L, 5L, 7L}) {
    const long value = min_layers(d);
    table.rows.push_back({"min_layers", "d" + std::to_string(d), csv_number(double(value))});
    ctx.manifest.metrics["min_layers_d" + std::to_string(d)] = double(value);
  }
  ctx.emit_csv("tables.csv", table);
}

// Haar-random state preparation with the single-phase rf control.
inline void run_state_prep(const Context& ctx) {
  const Settings& s = ctx.settings;
  const std::uint64_t seed = s.get_seed();
  const long d = s.get_int("grape.dimension", 10);
  if (d < 2) throw ConfigError("grape.dimension: must be >= 2");
  const long steps = s.get_int("grape.steps", 120);
  if (steps < 1) throw ConfigError("grape.steps: must be >= 1");
  const double duration_pi = s.get_double("grape.duration_pi_units", 6.0);
  if (duration_pi <= 0.0) throw ConfigError("grape.duration_pi_units: must be positive");
  const double beta = s.get_double("grape.beta_per_omega_rf", 1.0);
  const long max_iters = s.get_int("grape.max_iters", 3000);
  if (max_iters < 1) throw ConfigError("grape.max_iters: must be >= 1");
  const double target_infidelity = s.get_double("grape.target_infidelity", 1e-3);
  if (target_infidelity <= 0.0) throw ConfigError("grape.target_infidelity: must be positive");

  QudecimalControl ctl;
  ctl.beta = beta;
  ctl.J = SpinQuantum{int(d) - 1};
  auto h = [ctl](const RealVector& c) { return qudecimal_hamiltonian(ctl, c[0]); };
  auto dh = [ctl](const RealVector& c, int) {
    return qudecimal_hamiltonian_derivative(ctl, c[0]);
  };

  CounterRng rng(seed, "state-target");
  const Vector psi0 = Vector::Unit(d, d - 1);  // stretched |J, -J>
  const Vector psit = rng.haar_state(int(d));

  ControlProblem problem;
  problem.n_controls = 1;
  problem.total_time = duration_pi * pi;
  problem.systems = {state_target_system(h, dh, psi0, psit)};

  OptimizeConfig cfg;
  cfg.max_iters = int(max_iters);
  cfg.seed = seed;
  cfg.target_fidelity = 1.0 - target_infidelity;
  const auto res = grape_optimize(problem, int(steps), cfg);

  CsvTable waveform;
  waveform.header = {"step", "time", "phase_per_pi"};
  for (Eigen::Index j = 0; j < res.waveform.steps(); ++j)
    waveform.rows.push_back({csv_number(double(j)), csv_number(double(j) * res.waveform.dt),
                             csv_number(res.waveform.values(j, 0))});
  ctx.emit_csv("waveform.csv", waveform);

  ctx.manifest.metrics["fidelity"] = res.fidelity;
  ctx.manifest.metrics["infidelity"] = 1.0 - res.fidelity;
  ctx.manifest.metrics["iterations"] = double(res.iterations);
  ctx.manifest.metrics["converged"] = (1.0 - res.fidelity <= target_infidelity) ? 1.0 : 0.0;
}

// Angular momentum operator export.
inline void run_spin_ops(const Context& ctx) {
  const long two_j = ctx.settings.get_int("spin.two_j", 9);
  if (two_j < 1) throw ConfigError("spin.two_j: must be >= 1");
  const SpinQuantum J{int(two_j)};
  const auto ops = angular_momentum_ops(J);
  const Eigen::Index d = ops[0].rows();

  CsvTable table;
  table.header = {"row", "col", "jx_re", "jx_im", "jy_re", "jy_im", "jz_re", "jz_im"};
  for (Eigen::Index a = 0; a < d; ++a)
    for (Eigen::Index b = 0; b < d; ++b)
      table.rows.push_back({csv_number(double(a)), csv_number(double(b)),
                            csv_number(ops[0](a, b).real()), csv_number(ops[0](a, b).imag()),
                            csv_number(ops[1](a, b).real()), csv_number(ops[1](a, b).imag()),
                            csv_number(ops[2](a, b).real()), csv_number(ops[2](a, b).imag())});
  ctx.emit_csv("spin_ops.csv", table);

  const double j = double(two_j) / 2.0;
  const Matrix casimir = ops[0] * ops[0] + ops[1] * ops[1] + ops[2] * ops[2];
  ctx.manifest.metrics["dimension"] = double(d);
  ctx.manifest.metrics["casimir_residual"] =
      max_abs(casimir - j * (j + 1.0) * Matrix::Identity(d, d));
}

// Spectrum of the rf + tensor-shift control Hamiltonian.
inline void run_model_spectrum(const Context& ctx) {
  const Settings& s = ctx.settings;
  const long two_j = s.get_int("model.two_j", 9);
  if (two_j < 1) throw ConfigError("model.two_j: must be >= 1");
  QudecimalControl ctl;
  ctl.J = SpinQuantum{int(two_j)};
  ctl.beta = s.get_double("model.beta_per_omega_rf", 1.0);
  const double phase = s.get_double("model.phase_per_pi", 0.0);
  const Matrix h = qudecimal_hamiltonian(ctl, phase);
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("model spectrum: eigensolver failed");

  CsvTable table;
  table.header = {"level", "energy_omega_rf_units"};
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k)
    table.rows.push_back({csv_number(double(k)), csv_number(es.eigenvalues()[k])});
  ctx.emit_csv("spectrum.csv", table);

  ctx.manifest.metrics["dimension"] = double(es.eigenvalues().size());
  ctx.manifest.metrics["ground_energy"] = es.eigenvalues()[0];
  ctx.manifest.metrics["first_gap"] = es.eigenvalues()[1] - es.eigenvalues()[0];
}

// Radiative-cascade coherence transfer: numeric Lindblad vs closed form.
inline void run_simulate_coherence(const Context& ctx) {
  const Settings& s = ctx.settings;
  const double gamma = s.get_double("simulate.gamma", 1.0);
  if (gamma <= 0.0) throw ConfigError("simulate.gamma: must be positive");
  const double delta = s.get_double("simulate.delta_per_gamma", 2.0) * gamma;
  const double t_max = s.get_double("simulate.t_max_per_gamma", 3.0) / gamma;
  if (t_max <= 0.0) throw ConfigError("simulate.t_max_per_gamma: must be positive");
  const long points = s.get_int("simulate.points", 30);
  if (points < 1) throw ConfigError("simulate.points: must be >= 1");
  const double dt = s.get_double("simulate.dt", 1e-3);
  if (dt <= 0.0) throw ConfigError("simulate.dt: must be positive");

  // Levels |e0>, |e1>, |g0>, |g1>: one collective emission channel carries
  // the excited coherence down to the ground pair.
  Matrix w = Matrix::Zero(4, 4);
  w(2, 0) = 1.0;
  w(3, 1) = 1.0;
  Matrix h0 = Matrix::Zero(4, 4);
  h0(1, 1) = delta;
  const auto model = make_lindblad(h0, {{w, gamma}});
  Matrix rho0 = Matrix::Zero(4, 4);
  rho0.topLeftCorner(2, 2) << 0.5, 0.5, 0.5, 0.5;

  CsvTable table;
  table.header = {"t", "numeric_re", "numeric_im", "closed_re", "closed_im"};
  double worst = 0.0;
  for (long k = 1; k <= points; ++k) {
    const double t = t_max * double(k) / double(points);
    const Matrix rho = lindblad_propagate(model, rho0, t, dt);
    const Complex numeric = rho(2, 3) / rho0(0, 1);
    const Complex closed_p = two_level_coherence(delta, gamma, t);
    const Complex closed_m = two_level_coherence(-delta, gamma, t);
    const Complex closed =
        std::abs(numeric - closed_p) <= std::abs(numeric - closed_m) ? closed_p : closed_m;
    worst = std::max(worst, std::abs(numeric - closed));
    table.rows.push_back({csv_number(t), csv_number(numeric.real()), csv_number(numeric.imag()),
                          csv_number(closed.real()), csv_number(closed.imag())});
  }
  ctx.emit_csv("coherence.csv", table);
  ctx.manifest.metrics["max_mismatch"] = worst;
  ctx.manifest.metrics["converged"] = worst < 1e-6 ? 1.0 : 0.0;
}

// Amplitude recovery on a random logical state parked on a damaged level.
inline void run_catcode_example(const Context& ctx) {
  const Settings& s = ctx.settings;
  const std::uint64_t seed = s.get_seed();
  const long two_j = s.get_int("catcode.two_j", 9);
  if (two_j < 1 || two_j % 2 == 0)
    throw ConfigError("catcode.two_j: must be an odd (half-integer spin) value >= 1");
  CatCode code{SpinQuantum{int(two_j)}};
  const long level = s.get_int("catcode.kitten_level", 2);
  if (level < 0 || level > max_kitten_index(code))
    throw ConfigError("catcode.kitten_level: outside [0, k_max]");

  CounterRng rng(seed, "catcode-state");
  Complex alpha = rng.complex_normal(), beta = rng.complex_normal();
  const double norm = std::sqrt(std::norm(alpha) + std::norm(beta));
  alpha /= norm;
  beta /= norm;

  const Eigen::Index d = two_j + 1;
  const Vector damaged = alpha * Vector::Unit(d, d - 1 - level) + beta * Vector::Unit(d, level);
  const Vector healthy = alpha * Vector::Unit(d, d - 1) + beta * Vector::Unit(d, 0);
  const Matrix recovered = amplitude_recovery(code, Matrix(damaged * damaged.adjoint()));
  const double fidelity = (healthy.adjoint() * recovered * healthy).value().real();

  ctx.manifest.metrics["recovery_fidelity"] = fidelity;
  ctx.manifest.metrics["kitten_level"] = double(level);
  ctx.manifest.metrics["converged"] = fidelity > 1.0 - 1e-9 ? 1.0 : 0.0;
}

// Break-even threshold scan over the repetition size n.
inline void run_threshold_scan(const Context& ctx) {
  const Settings& s = ctx.settings;
  GadgetConfig cfg;
  const long two_j = s.get_int("threshold.two_j", 9);
  if (two_j < 1 || two_j % 2 == 0)
    throw ConfigError("threshold.two_j: must be an odd (half-integer spin) value >= 1");
  cfg.J = SpinQuantum{int(two_j)};
  cfg.r1 = int(s.get_int("threshold.r1", 7));
  if (cfg.r1 < 1 || cfg.r1 % 2 == 0) throw ConfigError("threshold.r1: must be odd >= 1");
  cfg.r2 = int(s.get_int("threshold.r2", 1));
  if (cfg.r2 < 0) throw ConfigError("threshold.r2: must be >= 0");
  const std::string convention = s.get_string("threshold.k_max_convention", "lower_half");
  if (convention == "lower_half")
    cfg.kmax_convention = KmaxConvention::lower_half;
  else if (convention == "upper_half")
    cfg.kmax_convention = KmaxConvention::upper_half;
  else
    throw ConfigError("threshold.k_max_convention: expected lower_half or upper_half");

  const long n_min = s.get_int("threshold.n_min", 3);
  const long n_max = s.get_int("threshold.n_max", 41);
  if (n_min < 3 || n_min % 2 == 0) throw ConfigError("threshold.n_min: must be odd >= 3");
  if (n_max < n_min) throw ConfigError("threshold.n_max: must be >= n_min");

  const std::string mapping_name = s.get_string("threshold.mapping", "rotation");
  NoiseMapping mapping;
  if (mapping_name == "rotation") {
    mapping = rotation_noise_mapping(cfg.J, s.get_double("threshold.ancilla_leak", 0.0));
  } else if (mapping_name == "optical") {
    mapping = optical_noise_mapping(s.get_double("threshold.alpha", 0.0137),
                                    s.get_double("threshold.beta", 0.2),
                                    s.get_double("threshold.ancilla_leak", 0.0));
  } else {
    throw ConfigError("threshold.mapping: expected rotation or optical");
  }

  const std::string target_name = s.get_string("threshold.target", "identity_line");
  ThresholdTarget target;
  if (target_name == "identity_line")
    target = ThresholdTarget::identity_line;
  else if (target_name == "css_line")
    target = ThresholdTarget::css_line;
  else
    throw ConfigError("threshold.target: expected identity_line or css_line");
  const double css = s.get_double("threshold.css_threshold", 0.67e-3);

  const auto scan = threshold_scan(cfg, mapping, target, int(n_min), int(n_max), css);

  CsvTable table;
  table.header = {"n", "eps", "eps_logical", "phase_part", "amp_part"};
  for (const auto& row : scan.rows) {
    if (!row.found) continue;
    GadgetConfig at = cfg;
    at.n = row.n;
    const auto b = logical_error_breakdown(at, mapping(row.crossing));
    const double phase_part = b.phase.eps_target + b.phase.eps_control + b.phase_ec;
    const double amp_part = b.amp.eps_target + b.amp.eps_control + b.amp.eps_ec;
    table.rows.push_back({csv_number(double(row.n)), csv_number(row.crossing),
                          csv_number(b.total), csv_number(phase_part), csv_number(amp_part)});
    ctx.manifest.metrics["crossing_n" + std::to_string(row.n)] = row.crossing;
  }
  ctx.emit_csv("scan.csv", table);

  ctx.manifest.metrics["rows_with_crossing"] = double(table.rows.size());
  ctx.manifest.metrics["best_n"] = scan.best_n ? double(*scan.best_n) : -1.0;
  ctx.manifest.metrics["best_crossing"] = scan.best_crossing;
}

}  // namespace scenarios

// ---------------------------------------------------------------------------
// Scenario dispatch
// ---------------------------------------------------------------------------

inline const std::map<std::string, std::function<void(const scenarios::Context&)>>&
scenario_registry() {
  static const std::map<std::string, std::function<void(const scenarios::Context&)>> reg = {
      {"tables", scenarios::run_tables},
      {"state-prep", scenarios::run_state_prep},
      {"qudecimal-state-prep", scenarios::run_state_prep},
      {"spin-ops", scenarios::run_spin_ops},
      {"model-spectrum", scenarios::run_model_spectrum},
      {"simulate-coherence", scenarios::run_simulate_coherence},
      {"catcode-example", scenarios::run_catcode_example},
      {"threshold-scan", scenarios::run_threshold_scan},
  };
  return reg;
}

// Runs one scenario end to end: dispatch, artifacts, manifest on disk.
// `output_dir_override` (when non-empty) wins over the config's output_dir.
inline ResultManifest run_scenario(const Settings& settings,
                                   const std::string& output_dir_override = "") {
  const std::string name = settings.get_string("scenario");
  const auto& registry = scenario_registry();
  const auto it = registry.find(name);
  if (it == registry.end()) throw ConfigError("scenario: unknown scenario '" + name + "'");

  const std::string out_dir =
      output_dir_override.empty() ? settings.get_string("output_dir", "out/" + name)
                                  : output_dir_override;
  // Consume bookkeeping keys that are not part of any scenario schema.
  if (settings.has("output_dir")) settings.get_string("output_dir");
  if (settings.has("seed")) settings.get_int("seed");

  ResultManifest manifest;
  manifest.scenario = name;
  manifest.config_hash = settings.hash_hex();

  std::filesystem::create_directories(out_dir);
  scenarios::Context ctx{settings, out_dir, manifest};
  const auto start = std::chrono::steady_clock::now();
  it->second(ctx);
  settings.require_all_used();
  manifest.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  write_manifest(std::filesystem::path(out_dir) / "manifest.json", manifest);
  return manifest;
}

// ---------------------------------------------------------------------------
// Report: merge manifests into one summary
// ---------------------------------------------------------------------------

struct ReportSummary {
  nlohmann::json json;
  std::string table_text;
};

inline ReportSummary report(const std::vector<ResultManifest>& manifests) {
  if (manifests.empty()) throw std::invalid_argument("report: need at least one manifest");

  nlohmann::json runs = nlohmann::json::array();
  std::map<std::string, std::set<std::string>> versions;
  std::map<int, double> crossings;
  for (const auto& m : manifests) {
    runs.push_back(manifest_to_json(m));
    versions[m.scenario].insert(m.config_hash);
    for (const auto& [key, value] : m.metrics)
      if (key.rfind("crossing_n", 0) == 0)
        crossings[std::stoi(key.substr(10))] = value;
  }

  nlohmann::json warnings = nlohmann::json::array();
  for (const auto& [scenario, hashes] : versions)
    if (hashes.size() > 1)
      warnings.push_back("conflicting config versions for scenario '" + scenario + "'");

  nlohmann::json crossing_table = nlohmann::json::array();
  for (const auto& [n, eps] : crossings)  // std::map keeps this sorted by n
    crossing_table.push_back({{"n", n}, {"crossing", eps}});

  ReportSummary out;
  out.json = {{"runs", runs}, {"warnings", warnings}, {"threshold_crossings", crossing_table}};

  std::ostringstream text;
  text << "scenario                     metric                       value\n";
  for (const auto& m : manifests)
    for (const auto& [key, value] : m.metrics) {
      char line[128];
      std::snprintf(line, sizeof line, "%-28s %-28s %.10g\n", m.scenario.c_str(), key.c_str(),
                    value);
      text << line;
    }
  out.table_text = text.str();
  return out;
}

}  // namespace sqc
