// Command-line front end: single runs, seed sweeps, ablation grids and
// plot-ready series emission.
//
//   wudalab run <config>
//   wudalab sweep <config> --seeds N
//   wudalab ablate <config> --variants bnet,no-check [--seeds N]
//   wudalab figure <dir> --quantity accuracy|rho01_s|rho01_t
//
// WUDALAB_OUT overrides the output root from the config file.
// Exit codes: 0 success, 1 configuration error, 2 runtime failure.

#include "wudalab/runner.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <sstream>

namespace {

wudalab::ExperimentSpec load_spec(const std::string& path) {
  auto spec = wudalab::parse_spec_file(path);
  if (const char* out = std::getenv("WUDALAB_OUT")) {
    spec.out_dir = out;
  }
  return spec;
}

int execute_grid(wudalab::ExperimentSpec spec) {
  const auto result = wudalab::run_grid(spec, std::cout);
  std::cout << "artifacts written to " << spec.out_dir << "\n";
  if (result.failures > 0) {
    std::cerr << result.failures << " cell(s) failed; see failures.csv\n";
    return 2;
  }
  return 0;
}

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wudalab: noisy-source domain adaptation laboratory"};
  app.require_subcommand(1);

  std::string config_path, figure_dir;
  int seeds = 1;
  std::string variants_csv, quantity = "accuracy";

  auto* cmd_run = app.add_subcommand("run", "run the config's single variant with one seed");
  cmd_run->add_option("config", config_path, "experiment config file")->required();

  auto* cmd_sweep = app.add_subcommand("sweep", "run the config's variant over several seeds");
  cmd_sweep->add_option("config", config_path, "experiment config file")->required();
  cmd_sweep->add_option("--seeds", seeds, "number of seed indices")->default_val(5);

  auto* cmd_ablate = app.add_subcommand("ablate", "run a grid of variants x seeds");
  cmd_ablate->add_option("config", config_path, "experiment config file")->required();
  cmd_ablate->add_option("--variants", variants_csv, "comma-separated variant names")->required();
  cmd_ablate->add_option("--seeds", seeds, "number of seed indices")->default_val(1);

  auto* cmd_figure = app.add_subcommand("figure", "emit a long-format series CSV from run logs");
  cmd_figure->add_option("dir", figure_dir, "directory holding runlog_*.csv")->required();
  cmd_figure->add_option("--quantity", quantity, "accuracy | rho01_s | rho01_t")
      ->default_val("accuracy");

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_run->parsed()) {
      auto spec = load_spec(config_path);
      spec.num_seeds = 1;
      return execute_grid(std::move(spec));
    }
    if (cmd_sweep->parsed()) {
      auto spec = load_spec(config_path);
      spec.num_seeds = seeds;
      wudalab::validate_spec(spec);
      return execute_grid(std::move(spec));
    }
    if (cmd_ablate->parsed()) {
      auto spec = load_spec(config_path);
      spec.variants = split_list(variants_csv);
      spec.num_seeds = seeds;
      wudalab::validate_spec(spec);
      return execute_grid(std::move(spec));
    }
    if (cmd_figure->parsed()) {
      wudalab::emit_figure_series(figure_dir, quantity, std::cerr);
      return 0;
    }
  } catch (const std::invalid_argument& err) {
    std::cerr << "config error: " << err.what() << "\n";
    return 1;
  } catch (const std::exception& err) {
    std::cerr << "runtime failure: " << err.what() << "\n";
    return 2;
  }
  return 0;
}
