// Copyright 2026 The snoutbench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// snoutbench run      --config cfg.json [--preset desk] [--workers K] [--out DIR]
// snoutbench analyze  --run DIR
// snoutbench qbs-stats --config cfg.json

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "snoutbench/snoutbench.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitFailure = 1;

int run_command(const std::string& config_path, const std::string& preset, std::size_t workers,
                const std::string& out_dir) {
  snoutbench::ExperimentConfig cfg = snoutbench::load_config(config_path);
  if (!preset.empty()) snoutbench::apply_preset(cfg, preset);
  cfg = snoutbench::resolve_config(cfg);
  std::cerr << "running " << cfg.strategy << " against " << cfg.qbs.kind().name() << " ("
            << snoutbench::scenario_name(cfg.scenario) << "), " << cfg.counts.repetitions << " x "
            << cfg.counts.num_targets << " targets\n";
  const auto report = snoutbench::run_experiment(
      cfg, workers, [](const snoutbench::TargetResult& r, std::size_t done, std::size_t total) {
        std::fprintf(stderr, "[%zu/%zu] rep %zu target %zu: fitness %.4f test %.4f (%.1fs)\n", done, total,
                     r.repetition, r.target, r.fitness, r.test_accuracy, r.runtime_seconds);
      });
  snoutbench::write_report(report, out_dir);
  std::printf("mean test accuracy %.4f (std over repetitions %.4f), report in %s\n", report.mean_accuracy,
              report.std_over_repetitions, out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Evolutionary search for attribute-inference attacks on query-based systems"};
  app.require_subcommand(1);

  std::string config_path;
  std::string preset;
  std::size_t workers = 0;
  std::string out_dir = "snoutbench_run";
  auto* run = app.add_subcommand("run", "Run an attack experiment");
  run->add_option("--config", config_path, "Experiment config (JSON)")->required();
  run->add_option("--preset", preset, "Scale preset: desk or full");
  run->add_option("--workers", workers, "Worker threads (0 = all cores)");
  run->add_option("--out", out_dir, "Output directory");

  std::string run_dir;
  auto* analyze = app.add_subcommand("analyze", "Difference-query analysis of a finished run");
  analyze->add_option("--run", run_dir, "Run directory")->required();

  std::string stats_config;
  std::size_t instances = 2000;
  auto* stats = app.add_subcommand("qbs-stats", "Noise diagnostics for the configured mechanism");
  stats->add_option("--config", stats_config, "Experiment config (JSON)")->required();
  stats->add_option("--instances", instances, "Instances per probe query");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) return run_command(config_path, preset, workers, out_dir);
    if (*analyze) {
      const auto result = snoutbench::analyze_run(run_dir);
      snoutbench::write_text(std::filesystem::path(run_dir) / "analysis.json", result.dump(2) + "\n");
      std::cout << result.dump(2) << "\n";
      return 0;
    }
    if (*stats) {
      std::cout << snoutbench::qbs_stats(snoutbench::load_config(stats_config), instances).dump(2) << "\n";
      return 0;
    }
  } catch (const snoutbench::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == snoutbench::ErrorCode::kConfig ? kExitConfig : kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return 0;
}
