#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "mobcount/experiments.hpp"

using namespace mobcount;

int main(int argc, char** argv) {
  CLI::App app{"Traffic-count disaggregation experiments"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out";
  std::string counts_csv, table_csv;
  std::uint64_t seed = 0;
  bool seed_set = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "experiment config (JSON)")->required();
    sub->add_option("--seed", seed, "override the config master seed")
        ->each([&](const std::string&) { seed_set = true; });
    sub->add_option("--out", out_dir, "output directory");
    return sub;
  };

  add_common(app.add_subcommand("attendance", "tabulate expected attendances"));
  add_common(app.add_subcommand("simulate", "generate synthetic count datasets"));
  CLI::App* estimate =
      add_common(app.add_subcommand("estimate", "fit subpopulation sizes by EM"));
  estimate->add_option("--counts", counts_csv, "count dataset CSV")->required();
  estimate->add_option("--table", table_csv, "attendance table CSV")->required();
  add_common(app.add_subcommand("consistency", "MLE error versus counter number"));
  add_common(app.add_subcommand("strategies", "compare counter placement densities"));
  add_common(app.add_subcommand("pde-check", "transport-equation residual check"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    ExperimentConfig cfg = load_config(config_path);
    if (seed_set) cfg.master_seed = seed;
    const std::string cmd = app.get_subcommands().front()->get_name();
    if (cmd == "attendance")
      cmd_attendance(cfg, out_dir);
    else if (cmd == "simulate")
      cmd_simulate(cfg, out_dir);
    else if (cmd == "estimate")
      cmd_estimate(cfg, counts_csv, table_csv, out_dir);
    else if (cmd == "consistency")
      cmd_consistency(cfg, out_dir);
    else if (cmd == "strategies")
      cmd_strategies(cfg, out_dir);
    else if (cmd == "pde-check")
      cmd_pde_check(cfg, out_dir);
    return 0;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  }
}
