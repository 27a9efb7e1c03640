// Command-line driver for attack bundling experiments.
//
//   attack_bundle run <config> [--workers N]
//   attack_bundle synth <n> <d> <k> <seed> <out.csv>
//   attack_bundle train <config>
//   attack_bundle gap <n>...
//   attack_bundle default-config
//
// BUNDLING_OUTPUT_DIR overrides the configured output directory.
// Exit codes: 0 success, 2 config error, 3 data error, 4 numeric failure.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bundling/data.h"
#include "bundling/error.h"
#include "bundling/experiment.h"
#include "bundling/model_io.h"
#include "bundling/reporting.h"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

int ExitCodeFor(bundling::ErrorKind kind) {
  switch (kind) {
    case bundling::ErrorKind::kParse:
    case bundling::ErrorKind::kContract:
      return kExitConfig;
    case bundling::ErrorKind::kData:
    case bundling::ErrorKind::kShape:
    case bundling::ErrorKind::kIo:
      return kExitData;
    case bundling::ErrorKind::kTrainingDiverged:
    case bundling::ErrorKind::kAttackFailed:
      return kExitNumeric;
  }
  return kExitConfig;
}

int Run(const std::string& config_path, std::size_t workers) {
  bundling::ExperimentConfig config = bundling::LoadConfig(config_path);
  if (workers > 0) config.workers = workers;
  const std::string out_dir = bundling::ResolveOutputDir(config);
  const bundling::ExperimentReport report =
      bundling::RunExperiment(config, out_dir);
  std::ifstream summary(std::filesystem::path(out_dir) / "summary.txt");
  std::cout << summary.rdbuf();
  std::cout << "wrote " << report.files.size() << " files to " << out_dir << '\n';
  return 0;
}

int Train(const std::string& config_path) {
  const bundling::ExperimentConfig config = bundling::LoadConfig(config_path);
  const bundling::PreparedData data = bundling::PrepareData(config);
  const bundling::ModelParams model = bundling::PrepareModel(config, data);
  const std::string out_dir = bundling::ResolveOutputDir(config);
  std::filesystem::create_directories(out_dir);
  const std::string path = (std::filesystem::path(out_dir) / "model.txt").string();
  bundling::SaveModel(path, model);
  std::cout << "train error " << bundling::ErrorRate(model, data.train)
            << ", eval error " << bundling::ErrorRate(model, data.eval) << '\n'
            << "wrote " << path << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Attack bundling: per-example worst-case robustness evaluation"};
  app.require_subcommand(1);

  std::string config_path;
  std::size_t workers = 0;
  auto* run = app.add_subcommand("run", "Run a bundling experiment from a config file");
  run->add_option("config", config_path, "Experiment config")->required();
  run->add_option("--workers", workers, "Attack worker threads (overrides config)");

  std::size_t n = 0, d = 0, k = 0;
  std::uint64_t seed = 0;
  std::string out_csv;
  auto* synth = app.add_subcommand("synth", "Write a synthetic Gaussian-blob dataset");
  synth->add_option("n", n)->required();
  synth->add_option("d", d)->required();
  synth->add_option("k", k)->required();
  synth->add_option("seed", seed)->required();
  synth->add_option("out", out_csv)->required();

  auto* train = app.add_subcommand("train", "Train (or load) the configured model and save it");
  train->add_option("config", config_path, "Experiment config")->required();

  std::vector<std::size_t> gap_ns;
  auto* gap = app.add_subcommand("gap", "Print the WAT underestimation table");
  gap->add_option("n", gap_ns, "Numbers of attacks/examples")->required();

  app.add_subcommand("default-config", "Print the shipped default config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) return Run(config_path, workers);
    if (*train) return Train(config_path);
    if (*synth) {
      bundling::SaveDatasetCsv(out_csv, bundling::SynthDataset(n, d, k, seed));
      std::cout << "wrote " << out_csv << '\n';
      return 0;
    }
    if (*gap) {
      bundling::WriteWatGapCsv(std::cout, bundling::WatUnderestimationReport(gap_ns));
      return 0;
    }
    std::cout << bundling::DefaultConfigText();
    return 0;
  } catch (const bundling::Error& e) {
    std::cerr << "error (" << bundling::ErrorKindName(e.kind()) << "): " << e.what()
              << '\n';
    return ExitCodeFor(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
}
