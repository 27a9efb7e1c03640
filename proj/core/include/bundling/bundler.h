#ifndef BUNDLING_BUNDLER_H_
#define BUNDLING_BUNDLER_H_

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bundling/attacks.h"
#include "bundling/model.h"

namespace bundling {

// attack_id of the clean input, which every bundle considers first.
inline constexpr std::string_view kCleanAttackId = "none";

enum class CriterionKind { kMisclassify, kMaxConfidence, kMinNorm };

std::string_view CriterionKindName(CriterionKind kind);
CriterionKind ParseCriterionKind(std::string_view name);

struct Criterion {
  CriterionKind kind = CriterionKind::kMisclassify;
  double threshold = 0.5;  // max_confidence only, in [0.5, 1)

  static Criterion Misclassify() { return {CriterionKind::kMisclassify, 0.5}; }
  static Criterion MaxConfidence(double t) {
    return {CriterionKind::kMaxConfidence, t};
  }
  static Criterion MinNorm() { return {CriterionKind::kMinNorm, 0.5}; }

  void Validate() const;
  bool operator==(const Criterion&) const = default;
};

struct CandidateScore {
  bool misclassified = false;
  // Largest probability among the classes other than the true label.
  double wrong_confidence = 0.0;
  // L-infinity distance to the clean input.
  double perturbation_norm = 0.0;

  bool operator==(const CandidateScore&) const = default;
};

CandidateScore ScoreFromProbabilities(ConstVec probabilities,
                                      std::size_t true_label,
                                      double perturbation_norm);

// Throws kContract when candidate.example_index != clean_index.
CandidateScore Score(const ModelParams& model, const Example& clean,
                     std::size_t clean_index, const Candidate& candidate);

// Scores against the mean of spec.calls noisy predictions.
CandidateScore ScoreStochastic(const ModelParams& model,
                               const StochasticSpec& spec,
                               const Example& clean, std::size_t clean_index,
                               const Candidate& candidate, std::uint64_t seed);

enum class Choice { kFirst, kSecond };

// Total preorder over scores. A misclassified score always wins. Among two
// misclassified scores min_norm prefers the smaller norm, the other criteria
// the higher wrong_confidence. Among two correct ones every criterion prefers
// higher wrong_confidence. Exact ties return kFirst.
Choice Prefer(const CandidateScore& a, const CandidateScore& b,
              const Criterion& criterion);

// True when `challenger` strictly beats `incumbent`.
inline bool Beats(const CandidateScore& challenger,
                  const CandidateScore& incumbent, const Criterion& criterion) {
  return Prefer(incumbent, challenger, criterion) == Choice::kSecond;
}

// Candidate with the most fooled members; ties go to the higher mean
// wrong_confidence across members, then to the earlier candidate.
Candidate SelectByEnsemble(const Ensemble& ensemble, const Example& clean,
                           std::span<const Candidate> candidates);

// Example x attack error indicators, plus the clean-input column.
class OutcomeMatrix {
 public:
  OutcomeMatrix() = default;
  OutcomeMatrix(std::size_t num_examples, std::vector<std::string> attack_ids);

  std::size_t num_examples() const { return clean_errors_.size(); }
  std::size_t num_attacks() const { return attack_ids_.size(); }
  const std::vector<std::string>& attack_ids() const { return attack_ids_; }

  bool error(std::size_t example, std::size_t attack) const {
    return errors_[example * num_attacks() + attack] != 0;
  }
  bool ran(std::size_t example, std::size_t attack) const {
    return ran_[example * num_attacks() + attack] != 0;
  }
  bool clean_error(std::size_t example) const {
    return clean_errors_[example] != 0;
  }

  // Marks the entry as run and records whether it caused an error.
  void Record(std::size_t example, std::size_t attack, bool error);
  void RecordClean(std::size_t example, bool error);

  // True when every example ran this attack.
  bool ColumnComplete(std::size_t attack) const;
  double AttackErrorRate(std::size_t attack) const;
  double CleanErrorRate() const;
  bool RowError(std::size_t example) const;
  // Row-wise OR over the clean column and all attacks, averaged.
  double BundledErrorRate() const;

  bool operator==(const OutcomeMatrix&) const = default;

 private:
  std::vector<std::string> attack_ids_;
  std::vector<unsigned char> errors_;
  std::vector<unsigned char> ran_;
  std::vector<unsigned char> clean_errors_;
};

// n x n identity: attack i fools exactly example i. Clean column all zero.
OutcomeMatrix WatGapConstruction(std::size_t n);

// One budget unit is one execution of one attack (all of its restarts or
// samples) on one example.
struct BudgetPolicy {
  std::size_t max_attack_units_per_example =
      std::numeric_limits<std::size_t>::max();
  // When false, goals never deactivate an example; every attack runs.
  bool early_stop = true;

  bool operator==(const BudgetPolicy&) const = default;
};

struct ExampleProgress {
  std::size_t next_attack = 0;
  std::size_t units_spent = 0;
  std::optional<CandidateScore> best;
  bool active = true;
  bool stopped_early = false;     // goal met before the last attack
  bool budget_exhausted = false;  // ran out of units
};

// misclassify: some candidate is misclassified. max_confidence: some
// misclassified candidate has wrong_confidence > t. min_norm: never.
bool GoalMet(const Criterion& criterion, const CandidateScore& best);

struct Assignment {
  std::size_t example_index = 0;
  std::size_t attack_index = 0;

  bool operator==(const Assignment&) const = default;
};

// One scheduling round. Deactivates examples whose goal is met, whose units
// are exhausted, or that have run every attack; returns the next unrun attack
// for each example still active, in example order.
std::vector<Assignment> Schedule(const BudgetPolicy& budget,
                                 const Criterion& criterion,
                                 std::span<ExampleProgress> progress,
                                 std::size_t num_attacks);

struct ChosenCandidate {
  Candidate candidate;
  CandidateScore score;
};

struct AttackRun {
  std::string attack_id;
  std::size_t candidates = 0;  // restarts or samples produced
  bool failed = false;
  std::string error;
};

struct ExampleLog {
  std::vector<AttackRun> runs;
  std::size_t units_spent = 0;
  bool stopped_early = false;
  bool budget_exhausted = false;
};

struct BundleResult {
  Criterion criterion;
  double epsilon_budget = 0.0;  // largest epsilon among the attacks
  std::vector<ChosenCandidate> chosen;
  std::vector<CandidateScore> clean_scores;
  OutcomeMatrix outcome_matrix;
  std::vector<double> per_attack_error_rates;
  double bundled_error_rate = 0.0;
  std::vector<ExampleLog> computation_log;
  // Every generated candidate, when BundleOptions::keep_candidates is set.
  std::vector<Candidate> candidates;

  std::size_t TotalUnits() const;
};

struct BundleOptions {
  std::size_t workers = 1;
  // Score candidates against a randomized model instead of `model` itself.
  std::optional<StochasticSpec> stochastic;
  bool keep_candidates = false;
};

// Runs every attack (subject to the budget) on every example and keeps, per
// example, the best candidate under `criterion`, starting from the clean
// input. A failing attack is logged and contributes no candidate.
BundleResult Bundle(const ModelParams& model, const Dataset& dataset,
                    const AttackList& attacks, const Criterion& criterion,
                    const BudgetPolicy& budget, std::uint64_t seed,
                    const BundleOptions& options = {});

BundleResult Bundle(const ModelParams& model, const Dataset& dataset,
                    const std::vector<AttackConfig>& attacks,
                    const Criterion& criterion, const BudgetPolicy& budget,
                    std::uint64_t seed, const BundleOptions& options = {});

// Seed used to score one candidate against a stochastic model.
std::uint64_t ScoringSeed(std::uint64_t root_seed, const Candidate& candidate);

}  // namespace bundling

#endif  // BUNDLING_BUNDLER_H_
