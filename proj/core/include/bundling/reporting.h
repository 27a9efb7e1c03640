#ifndef BUNDLING_REPORTING_H_
#define BUNDLING_REPORTING_H_

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bundling/bundler.h"
#include "bundling/model.h"

namespace bundling {

enum class TableKind { kMat, kWat, kBundled };

std::string_view TableKindName(TableKind kind);  // "MAT", "WAT", "BUNDLED"

struct RateEntry {
  std::string attack_id;
  double rate = 0.0;
  // False when some example never ran this attack (early stopping or budget
  // exhaustion); the rate is then only a lower bound.
  bool complete = true;
};

struct RateTable {
  TableKind kind = TableKind::kMat;
  double clean_error = 0.0;
  std::vector<RateEntry> per_attack;
  std::optional<double> wat_max;       // WAT only
  std::optional<double> bundled_rate;  // BUNDLED only

  bool complete() const;
};

struct RateTables {
  RateTable mat;
  RateTable wat;
  RateTable bundled;
};

// All three tables from one outcome matrix. The clean column supplies
// clean_error. WAT max over zero attacks is 0.
RateTables MakeTables(const OutcomeMatrix& outcomes);
RateTables MakeTables(const BundleResult& result);

struct SuccessFailPoint {
  double threshold = 0.0;
  double success_rate = 0.0;  // clean, correct, confidence > t
  double failure_rate = 0.0;  // chosen candidate wrong with confidence > t
};

using SuccessFailCurve = std::vector<SuccessFailPoint>;

// Grid must be ascending and inside [0.5, 1); throws kContract otherwise.
SuccessFailCurve MakeSuccessFailCurve(const ModelParams& model,
                                      const Dataset& dataset,
                                      const BundleResult& result,
                                      std::span<const double> grid);

struct NormPoint {
  double epsilon = 0.0;
  double error_rate = 0.0;
};

using NormCurve = std::vector<NormPoint>;

// Fraction of examples whose chosen candidate is misclassified with
// perturbation_norm <= epsilon (1e-9 slack). Requires a min_norm result and
// an ascending, non-negative epsilon list.
NormCurve MakeNormCurve(const BundleResult& result,
                        std::span<const double> epsilons);

struct GapRow {
  std::size_t n = 0;
  double wat = 0.0;
  double bundled = 0.0;
  double gap = 0.0;
};

// Runs WatGapConstruction(n) through MakeTables for each n.
std::vector<GapRow> WatUnderestimationReport(std::span<const std::size_t> ns);

// `count` evenly spaced points from first to last inclusive.
std::vector<double> LinearGrid(double first, double last, std::size_t count);

// CSV writers. Headers are fixed:
//   rates.csv       kind,attack_id,rate
//   sf_curve.csv    t,success_rate,failure_rate
//   norm_curve.csv  epsilon,error_rate
//   wat_gap.csv     n,wat,bundled,gap
// In rates.csv an incomplete per-attack rate (or a WAT max over one) is
// written as NA.
void WriteRatesCsv(std::ostream& out, const RateTables& tables);
void WriteSuccessFailCsv(std::ostream& out, const SuccessFailCurve& curve);
void WriteNormCurveCsv(std::ostream& out, const NormCurve& curve);
void WriteWatGapCsv(std::ostream& out, std::span<const GapRow> rows);

// One row per example:
// index,attack_id,restart_index,misclassified,wrong_confidence,
// perturbation_norm,units_spent
void WriteBundleCsv(std::ostream& out, const BundleResult& result);
// attack_id,error_rate,complete for "none", each attack and "bundled".
void WriteBundleSummaryCsv(std::ostream& out, const BundleResult& result);

}  // namespace bundling

#endif  // BUNDLING_REPORTING_H_
