#ifndef BUNDLING_EXPERIMENT_H_
#define BUNDLING_EXPERIMENT_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "bundling/attacks.h"
#include "bundling/bundler.h"
#include "bundling/data.h"
#include "bundling/model.h"
#include "bundling/reporting.h"

namespace bundling {

enum class DataSourceKind { kSynthetic, kCsv };

struct DataSource {
  DataSourceKind kind = DataSourceKind::kSynthetic;
  // synthetic
  std::size_t n = 1500;
  std::size_t d = 20;
  std::size_t k = 3;
  std::uint64_t seed = 7;
  double separation = 3.0;
  // csv
  std::string path;
  std::string eval_path;  // optional; otherwise the last `eval` rows
  // Number of trailing examples held out for attacks; the rest train.
  std::size_t eval = 500;

  bool operator==(const DataSource&) const = default;
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  std::size_t workers = 1;

  DataSource data;

  Architecture architecture = Architecture::kMlp1;
  TrainConfig train;
  std::string model_path;  // load instead of training when set

  Criterion criterion;
  BudgetPolicy budget;

  std::vector<double> thresholds = LinearGrid(0.5, 0.99, 50);
  std::vector<double> epsilons = LinearGrid(0.0, 0.3, 31);
  std::vector<std::size_t> gap_n = {1, 2, 10, 100, 1000};
  bool dump_candidates = false;

  std::vector<AttackConfig> attacks;

  // Throws kContract naming the offending field.
  void Validate() const;
  bool operator==(const ExperimentConfig&) const = default;
};

// Line-oriented `key = value` text with [section] headers; each attack is a
// `[attack <id>]` section. `#` starts a comment. Errors are kParse with
// "<source>:<line>: ..." messages. Relative paths are kept as written.
ExperimentConfig ParseConfig(std::istream& in,
                             const std::string& source = "<config>");
ExperimentConfig LoadConfig(const std::string& path);
std::string SerializeConfig(const ExperimentConfig& config);

// The shipped default experiment.
std::string DefaultConfigText();

struct PreparedData {
  Dataset train;
  Dataset eval;
};

PreparedData PrepareData(const ExperimentConfig& config);
// Loads config.model_path when set, otherwise trains on prepared.train.
ModelParams PrepareModel(const ExperimentConfig& config,
                         const PreparedData& prepared);

struct ExperimentReport {
  std::string output_dir;
  double clean_error = 0.0;
  RateTables tables;
  double bundled_error_rate = 0.0;
  std::size_t attack_units = 0;
  std::vector<std::string> files;  // written artifact paths
};

// Trains or loads the model, bundles the attack suite on the held-out
// examples, and writes rates.csv, sf_curve.csv, norm_curve.csv, wat_gap.csv,
// bundle.csv, bundle_summary.csv, model.txt and summary.txt (plus
// candidates.csv when requested) into `output_dir`. All files are rendered
// in memory before any is written.
ExperimentReport RunExperiment(const ExperimentConfig& config,
                               const std::string& output_dir);

// Output directory after applying the BUNDLING_OUTPUT_DIR override.
std::string ResolveOutputDir(const ExperimentConfig& config);

}  // namespace bundling

#endif  // BUNDLING_EXPERIMENT_H_
