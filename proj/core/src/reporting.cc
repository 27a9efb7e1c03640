#include "bundling/reporting.h"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "bundling/error.h"
#include "bundling/format.h"

namespace bundling {
namespace {

constexpr double kNormSlack = 1e-9;

double Fraction(std::size_t count, std::size_t total) {
  return total == 0 ? 0.0
                    : static_cast<double>(count) / static_cast<double>(total);
}

void RequireAscending(std::span<const double> values, const char* what) {
  for (std::size_t i = 1; i < values.size(); ++i) {
    Require(values[i - 1] <= values[i], std::string(what) + " must be sorted ascending");
  }
}

}  // namespace

std::string_view TableKindName(TableKind kind) {
  switch (kind) {
    case TableKind::kMat:
      return "MAT";
    case TableKind::kWat:
      return "WAT";
    case TableKind::kBundled:
      return "BUNDLED";
  }
  return "MAT";
}

bool RateTable::complete() const {
  return std::all_of(per_attack.begin(), per_attack.end(),
                     [](const RateEntry& e) { return e.complete; });
}

RateTables MakeTables(const OutcomeMatrix& outcomes) {
  RateTable mat;
  mat.kind = TableKind::kMat;
  mat.clean_error = outcomes.CleanErrorRate();
  for (std::size_t a = 0; a < outcomes.num_attacks(); ++a) {
    mat.per_attack.push_back({outcomes.attack_ids()[a],
                              outcomes.AttackErrorRate(a),
                              outcomes.ColumnComplete(a)});
  }

  RateTable wat = mat;
  wat.kind = TableKind::kWat;
  double max_rate = 0.0;
  for (const RateEntry& e : mat.per_attack) max_rate = std::max(max_rate, e.rate);
  wat.wat_max = max_rate;

  RateTable bundled = mat;
  bundled.kind = TableKind::kBundled;
  bundled.bundled_rate = outcomes.BundledErrorRate();

  return {std::move(mat), std::move(wat), std::move(bundled)};
}

RateTables MakeTables(const BundleResult& result) {
  return MakeTables(result.outcome_matrix);
}

SuccessFailCurve MakeSuccessFailCurve(const ModelParams& model,
                                      const Dataset& dataset,
                                      const BundleResult& result,
                                      std::span<const double> grid) {
  Require(result.chosen.size() == dataset.size(),
          "bundle result does not match the dataset");
  for (double t : grid) {
    Require(t >= 0.5 && t < 1.0, "threshold grid must lie in [0.5, 1)");
  }
  RequireAscending(grid, "threshold grid");

  // Clean confidence of correctly classified examples; -1 marks an error.
  std::vector<double> clean_confidence(dataset.size());
  for (std::size_t e = 0; e < dataset.size(); ++e) {
    const Prediction pred = Predict(model, dataset[e].features);
    clean_confidence[e] =
        pred.predicted_class == dataset[e].label ? pred.confidence : -1.0;
  }

  SuccessFailCurve curve;
  curve.reserve(grid.size());
  for (double t : grid) {
    std::size_t successes = 0;
    std::size_t failures = 0;
    for (std::size_t e = 0; e < dataset.size(); ++e) {
      if (clean_confidence[e] > t) ++successes;
      const CandidateScore& s = result.chosen[e].score;
      if (s.misclassified && s.wrong_confidence > t) ++failures;
    }
    curve.push_back({t, Fraction(successes, dataset.size()),
                     Fraction(failures, dataset.size())});
  }
  return curve;
}

NormCurve MakeNormCurve(const BundleResult& result,
                        std::span<const double> epsilons) {
  Require(result.criterion.kind == CriterionKind::kMinNorm,
          "norm curve needs a min_norm bundle");
  for (double eps : epsilons) {
    Require(std::isfinite(eps) && eps >= 0.0, "epsilons must be non-negative");
  }
  RequireAscending(epsilons, "epsilon grid");

  std::vector<double> norms;
  for (const ChosenCandidate& c : result.chosen) {
    if (c.score.misclassified) norms.push_back(c.score.perturbation_norm);
  }
  std::sort(norms.begin(), norms.end());

  NormCurve curve;
  curve.reserve(epsilons.size());
  for (double eps : epsilons) {
    const auto count = static_cast<std::size_t>(
        std::upper_bound(norms.begin(), norms.end(), eps + kNormSlack) -
        norms.begin());
    curve.push_back({eps, Fraction(count, result.chosen.size())});
  }
  return curve;
}

std::vector<GapRow> WatUnderestimationReport(std::span<const std::size_t> ns) {
  std::vector<GapRow> rows;
  rows.reserve(ns.size());
  for (std::size_t n : ns) {
    const RateTables tables = MakeTables(WatGapConstruction(n));
    GapRow row;
    row.n = n;
    row.wat = *tables.wat.wat_max;
    row.bundled = *tables.bundled.bundled_rate;
    row.gap = row.bundled - row.wat;
    rows.push_back(row);
  }
  return rows;
}

std::vector<double> LinearGrid(double first, double last, std::size_t count) {
  std::vector<double> grid;
  if (count == 0) return grid;
  if (count == 1) return {first};
  grid.reserve(count);
  const double step = (last - first) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i + 1 < count; ++i) {
    grid.push_back(first + step * static_cast<double>(i));
  }
  grid.push_back(last);
  return grid;
}

void WriteRatesCsv(std::ostream& out, const RateTables& tables) {
  out << "kind,attack_id,rate\n";
  auto write_table = [&](const RateTable& table) {
    const std::string_view kind = TableKindName(table.kind);
    out << kind << ',' << kCleanAttackId << ','
        << FormatDouble(table.clean_error) << '\n';
    for (const RateEntry& e : table.per_attack) {
      out << kind << ',' << e.attack_id << ','
          << (e.complete ? FormatDouble(e.rate) : std::string("NA")) << '\n';
    }
    if (table.wat_max) {
      out << kind << ",max,"
          << (table.complete() ? FormatDouble(*table.wat_max) : std::string("NA"))
          << '\n';
    }
    if (table.bundled_rate) {
      out << kind << ",bundled," << FormatDouble(*table.bundled_rate) << '\n';
    }
  };
  write_table(tables.mat);
  write_table(tables.wat);
  write_table(tables.bundled);
}

void WriteSuccessFailCsv(std::ostream& out, const SuccessFailCurve& curve) {
  out << "t,success_rate,failure_rate\n";
  for (const SuccessFailPoint& p : curve) {
    out << FormatDouble(p.threshold) << ',' << FormatDouble(p.success_rate)
        << ',' << FormatDouble(p.failure_rate) << '\n';
  }
}

void WriteNormCurveCsv(std::ostream& out, const NormCurve& curve) {
  out << "epsilon,error_rate\n";
  for (const NormPoint& p : curve) {
    out << FormatDouble(p.epsilon) << ',' << FormatDouble(p.error_rate) << '\n';
  }
}

void WriteWatGapCsv(std::ostream& out, std::span<const GapRow> rows) {
  out << "n,wat,bundled,gap\n";
  for (const GapRow& r : rows) {
    out << r.n << ',' << FormatDouble(r.wat) << ',' << FormatDouble(r.bundled)
        << ',' << FormatDouble(r.gap) << '\n';
  }
}

void WriteBundleCsv(std::ostream& out, const BundleResult& result) {
  out << "index,attack_id,restart_index,misclassified,wrong_confidence,"
         "perturbation_norm,units_spent\n";
  for (std::size_t e = 0; e < result.chosen.size(); ++e) {
    const ChosenCandidate& c = result.chosen[e];
    out << e << ',' << c.candidate.attack_id << ','
        << c.candidate.restart_index << ',' << (c.score.misclassified ? 1 : 0)
        << ',' << FormatDouble(c.score.wrong_confidence) << ','
        << FormatDouble(c.score.perturbation_norm) << ','
        << result.computation_log[e].units_spent << '\n';
  }
}

void WriteBundleSummaryCsv(std::ostream& out, const BundleResult& result) {
  const OutcomeMatrix& m = result.outcome_matrix;
  out << "attack_id,error_rate,complete\n";
  out << kCleanAttackId << ',' << FormatDouble(m.CleanErrorRate()) << ",1\n";
  for (std::size_t a = 0; a < m.num_attacks(); ++a) {
    out << m.attack_ids()[a] << ',' << FormatDouble(result.per_attack_error_rates[a])
        << ',' << (m.ColumnComplete(a) ? 1 : 0) << '\n';
  }
  out << "bundled," << FormatDouble(result.bundled_error_rate) << ",1\n";
}

}  // namespace bundling
