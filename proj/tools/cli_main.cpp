// sqc command-line front end: config-driven, reproducible numerical scenarios
// with CSV/JSON artifacts.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sqc/cli.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "scenario config file")->required();
  cmd->add_option("--out-dir", args.out_dir, "output directory (overrides config)");
}

int run_from_config(const CommonArgs& args, const std::string& expected_family = "") {
  sqc::Settings settings = sqc::Settings::load(args.config_path);
  if (!expected_family.empty()) {
    const std::string scenario = settings.entries().count("scenario")
                                     ? settings.entries().at("scenario")
                                     : std::string{};
    if (scenario.rfind(expected_family, 0) != 0) {
      std::cerr << "config scenario '" << scenario << "' does not match command '"
                << expected_family << "'\n";
      return 1;
    }
  }
  const auto manifest = sqc::run_scenario(settings, args.out_dir);
  std::cout << sqc::manifest_to_json(manifest).dump(2) << '\n';
  const auto converged = manifest.metrics.find("converged");
  if (converged != manifest.metrics.end() && converged->second == 0.0) {
    std::cerr << "scenario '" << manifest.scenario << "' did not converge\n";
    return 2;  // nonconvergence: manifest still written
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spin-qudit control, spin-cat codes, and threshold bounds"};
  app.require_subcommand(1);

  CommonArgs run_args, spin_args, model_args, grape_args, sim_args, cat_args;
  auto* cmd_run = app.add_subcommand("run", "run any scenario from a config file");
  add_common(cmd_run, run_args);
  auto* cmd_spin = app.add_subcommand("spin-ops", "export angular momentum operators");
  add_common(cmd_spin, spin_args);
  auto* cmd_model = app.add_subcommand("model", "control Hamiltonian spectrum");
  add_common(cmd_model, model_args);
  auto* cmd_grape = app.add_subcommand("grape", "waveform optimization scenarios");
  add_common(cmd_grape, grape_args);
  auto* cmd_sim = app.add_subcommand("simulate", "open-system simulation scenarios");
  add_common(cmd_sim, sim_args);
  auto* cmd_cat = app.add_subcommand("catcode", "spin-cat code scenarios");
  add_common(cmd_cat, cat_args);

  CommonArgs thr_args;
  std::string sweep_n, scan_out;
  auto* cmd_thr = app.add_subcommand("threshold", "break-even threshold scan");
  add_common(cmd_thr, thr_args);
  cmd_thr->add_option("--sweep-n", sweep_n, "odd-n sweep range, e.g. 3..41");
  cmd_thr->add_option("--out", scan_out, "copy the scan CSV to this path");

  std::vector<std::string> manifest_paths;
  std::string report_out;
  auto* cmd_report = app.add_subcommand("report", "merge run manifests into a summary");
  cmd_report->add_option("manifests", manifest_paths, "manifest.json files")->required();
  cmd_report->add_option("--out", report_out, "summary JSON output path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_run->parsed()) return run_from_config(run_args);
    if (cmd_spin->parsed()) return run_from_config(spin_args, "spin-ops");
    if (cmd_model->parsed()) return run_from_config(model_args, "model");
    if (cmd_grape->parsed()) return run_from_config(grape_args);
    if (cmd_sim->parsed()) return run_from_config(sim_args, "simulate");
    if (cmd_cat->parsed()) return run_from_config(cat_args, "catcode");

    if (cmd_thr->parsed()) {
      sqc::Settings settings = sqc::Settings::load(thr_args.config_path);
      if (!sweep_n.empty()) {
        const auto dots = sweep_n.find("..");
        if (dots == std::string::npos) {
          std::cerr << "--sweep-n expects a..b\n";
          return 1;
        }
        settings.set("threshold.n_min", sweep_n.substr(0, dots));
        settings.set("threshold.n_max", sweep_n.substr(dots + 2));
      }
      const auto manifest = sqc::run_scenario(settings, thr_args.out_dir);
      std::cout << sqc::manifest_to_json(manifest).dump(2) << '\n';
      if (!scan_out.empty()) {
        const std::string out_dir = thr_args.out_dir.empty()
                                        ? settings.get_string("output_dir", "out/threshold-scan")
                                        : thr_args.out_dir;
        std::filesystem::copy_file(std::filesystem::path(out_dir) / "scan.csv", scan_out,
                                   std::filesystem::copy_options::overwrite_existing);
      }
      return 0;
    }

    if (cmd_report->parsed()) {
      std::vector<sqc::ResultManifest> manifests;
      for (const auto& path : manifest_paths) manifests.push_back(sqc::read_manifest(path));
      const auto summary = sqc::report(manifests);
      if (!report_out.empty()) {
        std::ofstream out(report_out);
        out << summary.json.dump(2) << '\n';
      } else {
        std::cout << summary.json.dump(2) << '\n';
      }
      std::cout << summary.table_text;
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
