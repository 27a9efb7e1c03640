#include "bundling/experiment.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <utility>

#include "bundling/error.h"
#include "bundling/format.h"
#include "bundling/model_io.h"

namespace bundling {
namespace {

namespace fs = std::filesystem;

void RequireFile(const std::string& path, const char* field) {
  if (!path.empty() && !fs::is_regular_file(path)) {
    Fail(ErrorKind::kContract, std::string("config field '") + field +
                                   "': file '" + path + "' does not exist");
  }
}

std::string Percent(double rate) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(2) << 100.0 * rate << '%';
  return out.str();
}

std::string RenderSummary(const ExperimentConfig& config,
                          const PreparedData& data, const ModelParams& model,
                          const BundleResult& result,
                          const RateTables& tables) {
  std::ostringstream out;
  out << "attack bundling experiment (desk-scale, synthetic stand-in model)\n";
  out << "model: " << ArchitectureName(model.architecture) << ", d="
      << model.input_dim << ", k=" << model.num_classes;
  if (model.architecture == Architecture::kMlp1) out << ", hidden=" << model.hidden;
  out << '\n';
  out << "train examples: " << data.train.size()
      << ", attacked examples: " << data.eval.size() << '\n';
  out << "criterion: " << CriterionKindName(config.criterion.kind);
  if (config.criterion.kind == CriterionKind::kMaxConfidence) {
    out << " (t=" << FormatDouble(config.criterion.threshold) << ")";
  }
  out << ", early stop: " << (config.budget.early_stop ? "on" : "off")
      << ", attack units spent: " << result.TotalUnits() << '\n';
  out << "epsilon budget: " << FormatDouble(result.epsilon_budget) << "\n\n";

  out << "clean error: " << Percent(tables.mat.clean_error) << '\n';
  if (tables.mat.per_attack.empty()) {
    out << "no attacks configured; bundled error equals clean error: "
        << Percent(*tables.bundled.bundled_rate) << '\n';
    return out.str();
  }
  out << "per-attack error rates (MAT):\n";
  for (const RateEntry& e : tables.mat.per_attack) {
    out << "  " << e.attack_id << ": " << Percent(e.rate)
        << (e.complete ? "" : " (incomplete: lower bound)") << '\n';
  }
  out << "worst single attack (WAT max): " << Percent(*tables.wat.wat_max)
      << (tables.wat.complete() ? "" : " (incomplete: lower bound)") << '\n';
  out << "bundled error: " << Percent(*tables.bundled.bundled_rate) << '\n';
  bool dominates = true;
  for (const RateEntry& e : tables.mat.per_attack) {
    dominates = dominates && *tables.bundled.bundled_rate >= e.rate;
  }
  out << "bundled >= every per-attack rate: " << (dominates ? "yes" : "NO") << '\n';
  return out.str();
}

}  // namespace

std::string DefaultConfigText() {
  return R"(# Desk-scale attack bundling experiment on synthetic Gaussian blobs.
# L-infinity budget 0.3 on [0, 1] inputs; a cheap (40 x 0.1) and an expensive
# (1000 x 0.04) randomly initialized PGD, uniform noise, and two smaller-budget
# PGD runs that give the norm curve some resolution.

[experiment]
seed = 20181210
output_dir = out
workers = 1

[data]
source = synthetic
n = 1500
d = 20
k = 3
seed = 7
separation = 8
eval = 500

[model]
architecture = mlp1
hidden = 32
learning_rate = 0.1
epochs = 30
batch_size = 32
seed = 3
weight_decay = 0

[criterion]
kind = max_confidence
threshold = 0.9

[budget]
max_units = unlimited
early_stop = false

[report]
thresholds = 0.5:0.99:50
epsilons = 0:0.3:61
gap_n = 1, 2, 10, 100, 1000
dump_candidates = false

[attack pgd_cheap]
variant = pgd
epsilon = 0.3
step_size = 0.1
num_steps = 40
num_restarts = 10
random_init = true

[attack pgd_expensive]
variant = pgd
epsilon = 0.3
step_size = 0.04
num_steps = 1000
num_restarts = 10
random_init = true

[attack noise]
variant = uniform_noise
epsilon = 0.3
num_samples = 100

[attack pgd_eps270]
variant = pgd
epsilon = 0.27
step_size = 0.05
num_steps = 40
num_restarts = 5
random_init = true

[attack pgd_eps285]
variant = pgd
epsilon = 0.285
step_size = 0.05
num_steps = 40
num_restarts = 5
random_init = true
)";
}

PreparedData PrepareData(const ExperimentConfig& config) {
  const DataSource& src = config.data;
  if (src.kind == DataSourceKind::kSynthetic) {
    const Dataset all = SynthDataset(src.n, src.d, src.k, src.seed,
                                     SynthOptions{src.separation});
    return {all.Slice(0, src.n - src.eval), all.Slice(src.n - src.eval, src.n)};
  }
  Dataset train = LoadDatasetCsv(src.path);
  if (!src.eval_path.empty()) {
    Dataset eval = LoadDatasetCsv(src.eval_path);
    const std::size_t k = std::max(train.num_classes(), eval.num_classes());
    if (eval.dimension() != train.dimension()) {
      Fail(ErrorKind::kData, "train and eval CSVs have different widths");
    }
    return {Dataset(train.dimension(), k, train.examples()),
            Dataset(eval.dimension(), k, eval.examples())};
  }
  if (src.eval < 1 || src.eval >= train.size()) {
    Fail(ErrorKind::kData, "data.eval must leave both splits non-empty (" +
                               std::to_string(train.size()) + " rows)");
  }
  const std::size_t cut = train.size() - src.eval;
  return {train.Slice(0, cut), train.Slice(cut, train.size())};
}

ModelParams PrepareModel(const ExperimentConfig& config,
                         const PreparedData& prepared) {
  if (!config.model_path.empty()) {
    ModelParams model = LoadModel(config.model_path);
    if (model.input_dim != prepared.eval.dimension() ||
        model.num_classes < prepared.eval.num_classes()) {
      Fail(ErrorKind::kShape, "loaded model does not match the dataset");
    }
    return model;
  }
  TrainConfig train = config.train;
  return Train(prepared.train, config.architecture, train);
}

std::string ResolveOutputDir(const ExperimentConfig& config) {
  if (const char* env = std::getenv("BUNDLING_OUTPUT_DIR"); env != nullptr && *env) {
    return env;
  }
  return config.output_dir;
}

ExperimentReport RunExperiment(const ExperimentConfig& config,
                               const std::string& output_dir) {
  config.Validate();
  RequireFile(config.data.kind == DataSourceKind::kCsv ? config.data.path : "",
              "data.path");
  RequireFile(config.data.kind == DataSourceKind::kCsv ? config.data.eval_path : "",
              "data.eval_path");
  RequireFile(config.model_path, "model.load");

  const PreparedData data = PrepareData(config);
  const ModelParams model = PrepareModel(config, data);

  BundleOptions options;
  options.workers = config.workers;
  options.keep_candidates = config.dump_candidates;
  const AttackList attacks = MakeAttacks(config.attacks);
  const BundleResult result = Bundle(model, data.eval, attacks, config.criterion,
                                     config.budget, config.seed, options);

  // The norm curve needs min-norm selection with every attack run.
  BundleResult min_norm_storage;
  const BundleResult* min_norm = &result;
  if (config.criterion.kind != CriterionKind::kMinNorm ||
      config.budget != BudgetPolicy{}) {
    min_norm_storage = Bundle(model, data.eval, attacks, Criterion::MinNorm(),
                              BudgetPolicy{}, config.seed,
                              BundleOptions{config.workers, std::nullopt, false});
    min_norm = &min_norm_storage;
  }

  const RateTables tables = MakeTables(result);
  const SuccessFailCurve sf =
      MakeSuccessFailCurve(model, data.eval, result, config.thresholds);
  const NormCurve norm = MakeNormCurve(*min_norm, config.epsilons);
  const std::vector<GapRow> gap = WatUnderestimationReport(config.gap_n);

  std::vector<std::pair<std::string, std::string>> files;
  auto render = [&](const char* name, auto&& writer) {
    std::ostringstream out;
    writer(out);
    files.emplace_back(name, out.str());
  };
  render("rates.csv", [&](std::ostream& o) { WriteRatesCsv(o, tables); });
  render("sf_curve.csv", [&](std::ostream& o) { WriteSuccessFailCsv(o, sf); });
  render("norm_curve.csv", [&](std::ostream& o) { WriteNormCurveCsv(o, norm); });
  render("wat_gap.csv", [&](std::ostream& o) { WriteWatGapCsv(o, gap); });
  render("bundle.csv", [&](std::ostream& o) { WriteBundleCsv(o, result); });
  render("bundle_summary.csv",
         [&](std::ostream& o) { WriteBundleSummaryCsv(o, result); });
  render("model.txt", [&](std::ostream& o) { WriteModel(o, model); });
  if (config.dump_candidates) {
    render("candidates.csv",
           [&](std::ostream& o) { WriteCandidatesCsv(o, result.candidates); });
  }
  const std::string summary = RenderSummary(config, data, model, result, tables);
  files.emplace_back("summary.txt", summary);

  std::error_code ec;
  fs::create_directories(output_dir, ec);
  if (ec) {
    Fail(ErrorKind::kIo, "cannot create output directory '" + output_dir +
                             "': " + ec.message());
  }
  ExperimentReport report;
  report.output_dir = output_dir;
  for (const auto& [name, contents] : files) {
    const std::string path = (fs::path(output_dir) / name).string();
    std::ofstream out(path, std::ios::binary);
    out << contents;
    out.close();
    if (!out) Fail(ErrorKind::kIo, "failed to write '" + path + "'");
    report.files.push_back(path);
  }
  report.clean_error = tables.mat.clean_error;
  report.tables = tables;
  report.bundled_error_rate = result.bundled_error_rate;
  report.attack_units = result.TotalUnits();
  return report;
}

}  // namespace bundling
