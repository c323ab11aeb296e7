// Experiment runner: pvb <config.json> [--output-dir DIR] [--jobs N] [-v]

#include "pvb/experiment.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Biorthogonal von Neumann basis experiments"};
  std::string config;
  std::string output_dir;
  unsigned jobs = 1;
  int verbosity = 0;
  app.add_option("config", config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  app.add_option("-o,--output-dir", output_dir, "directory for result files (overrides the config)");
  app.add_option("-j,--jobs", jobs, "parallel cells")->check(CLI::PositiveNumber);
  app.add_flag("-v,--verbose", verbosity, "more output; repeat for more");
  CLI11_PARSE(app, argc, argv);

  try {
    pvb::ExperimentConfig cfg = pvb::load_config(config);
    const std::filesystem::path dir = output_dir.empty() ? std::filesystem::path(cfg.output_dir) : std::filesystem::path(output_dir);
    const auto t0 = std::chrono::steady_clock::now();
    if (verbosity > 0) std::cerr << "pvb: running " << config << " (case " << cfg.case_name << ") into " << dir << "\n";
    const auto errors = pvb::run_experiment(cfg, dir, jobs);
    for (const auto& e : errors) std::cerr << "pvb: cell failed: " << e << "\n";
    if (verbosity > 0)
      std::cerr << "pvb: done in " << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()
                << " s\n";
    return errors.empty() ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "pvb: error: " << e.what() << "\n";
    return 2;
  }
}
