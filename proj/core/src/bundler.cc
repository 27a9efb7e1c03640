#include "bundling/bundler.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <set>
#include <thread>

#include "bundling/error.h"
#include "bundling/rng.h"

namespace bundling {
namespace {

// Everything one (example, attack) unit produces, before merging.
struct UnitOutcome {
  AttackRun run;
  std::optional<ChosenCandidate> best;
  bool any_error = false;
  std::vector<Candidate> candidates;
};

template <typename Fn>
void ParallelFor(std::size_t count, std::size_t workers, Fn&& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, count));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) fn(i);
    });
  }
}

}  // namespace

std::string_view CriterionKindName(CriterionKind kind) {
  switch (kind) {
    case CriterionKind::kMisclassify:
      return "misclassify";
    case CriterionKind::kMaxConfidence:
      return "max_confidence";
    case CriterionKind::kMinNorm:
      return "min_norm";
  }
  return "misclassify";
}

CriterionKind ParseCriterionKind(std::string_view name) {
  if (name == "misclassify") return CriterionKind::kMisclassify;
  if (name == "max_confidence") return CriterionKind::kMaxConfidence;
  if (name == "min_norm") return CriterionKind::kMinNorm;
  Fail(ErrorKind::kParse, "unknown criterion '" + std::string(name) + "'");
}

void Criterion::Validate() const {
  if (kind == CriterionKind::kMaxConfidence) {
    Require(threshold >= 0.5 && threshold < 1.0,
            "max_confidence threshold must lie in [0.5, 1)");
  }
}

CandidateScore ScoreFromProbabilities(ConstVec probabilities,
                                      std::size_t true_label,
                                      double perturbation_norm) {
  Require(true_label < probabilities.size(), "label out of range");
  CandidateScore score;
  score.misclassified = ArgMax(probabilities) != true_label;
  for (std::size_t c = 0; c < probabilities.size(); ++c) {
    if (c != true_label) {
      score.wrong_confidence = std::max(score.wrong_confidence, probabilities[c]);
    }
  }
  score.perturbation_norm = perturbation_norm;
  return score;
}

CandidateScore Score(const ModelParams& model, const Example& clean,
                     std::size_t clean_index, const Candidate& candidate) {
  Require(candidate.example_index == clean_index,
          "candidate for example " + std::to_string(candidate.example_index) +
              " scored against example " + std::to_string(clean_index));
  const Prediction pred = Predict(model, candidate.adversarial_input);
  return ScoreFromProbabilities(
      pred.probabilities, clean.label,
      LinfDistance(candidate.adversarial_input, clean.features));
}

CandidateScore ScoreStochastic(const ModelParams& model,
                               const StochasticSpec& spec,
                               const Example& clean, std::size_t clean_index,
                               const Candidate& candidate, std::uint64_t seed) {
  Require(candidate.example_index == clean_index,
          "candidate for example " + std::to_string(candidate.example_index) +
              " scored against example " + std::to_string(clean_index));
  const Prediction pred =
      PredictStochastic(model, spec, candidate.adversarial_input, seed);
  return ScoreFromProbabilities(
      pred.probabilities, clean.label,
      LinfDistance(candidate.adversarial_input, clean.features));
}

Choice Prefer(const CandidateScore& a, const CandidateScore& b,
              const Criterion& criterion) {
  if (a.misclassified != b.misclassified) {
    return a.misclassified ? Choice::kFirst : Choice::kSecond;
  }
  if (a.misclassified && criterion.kind == CriterionKind::kMinNorm) {
    return b.perturbation_norm < a.perturbation_norm ? Choice::kSecond
                                                     : Choice::kFirst;
  }
  return b.wrong_confidence > a.wrong_confidence ? Choice::kSecond
                                                 : Choice::kFirst;
}

Candidate SelectByEnsemble(const Ensemble& ensemble, const Example& clean,
                           std::span<const Candidate> candidates) {
  Require(!candidates.empty(), "ensemble selection needs at least one candidate");
  ensemble.Validate();
  std::size_t best = 0;
  std::size_t best_count = 0;
  double best_mean = -1.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const Vector& x = candidates[i].adversarial_input;
    std::size_t count = 0;
    double total = 0.0;
    for (const ModelParams& member : ensemble.members) {
      const Prediction pred = Predict(member, x);
      if (pred.predicted_class != clean.label) ++count;
      total += ScoreFromProbabilities(pred.probabilities, clean.label, 0.0)
                   .wrong_confidence;
    }
    const double mean = total / static_cast<double>(ensemble.members.size());
    if (i == 0 || count > best_count ||
        (count == best_count && mean > best_mean)) {
      best = i;
      best_count = count;
      best_mean = mean;
    }
  }
  return candidates[best];
}

OutcomeMatrix::OutcomeMatrix(std::size_t num_examples,
                             std::vector<std::string> attack_ids)
    : attack_ids_(std::move(attack_ids)),
      errors_(num_examples * attack_ids_.size(), 0),
      ran_(num_examples * attack_ids_.size(), 0),
      clean_errors_(num_examples, 0) {}

void OutcomeMatrix::Record(std::size_t example, std::size_t attack,
                           bool error) {
  Require(example < num_examples() && attack < num_attacks(),
          "outcome entry out of range");
  errors_[example * num_attacks() + attack] = error ? 1 : 0;
  ran_[example * num_attacks() + attack] = 1;
}

void OutcomeMatrix::RecordClean(std::size_t example, bool error) {
  Require(example < num_examples(), "outcome entry out of range");
  clean_errors_[example] = error ? 1 : 0;
}

bool OutcomeMatrix::ColumnComplete(std::size_t attack) const {
  for (std::size_t e = 0; e < num_examples(); ++e) {
    if (!ran(e, attack)) return false;
  }
  return true;
}

double OutcomeMatrix::AttackErrorRate(std::size_t attack) const {
  if (num_examples() == 0) return 0.0;
  std::size_t count = 0;
  for (std::size_t e = 0; e < num_examples(); ++e) count += error(e, attack);
  return static_cast<double>(count) / static_cast<double>(num_examples());
}

double OutcomeMatrix::CleanErrorRate() const {
  if (num_examples() == 0) return 0.0;
  std::size_t count = 0;
  for (unsigned char v : clean_errors_) count += v;
  return static_cast<double>(count) / static_cast<double>(num_examples());
}

bool OutcomeMatrix::RowError(std::size_t example) const {
  if (clean_error(example)) return true;
  for (std::size_t a = 0; a < num_attacks(); ++a) {
    if (error(example, a)) return true;
  }
  return false;
}

double OutcomeMatrix::BundledErrorRate() const {
  if (num_examples() == 0) return 0.0;
  std::size_t count = 0;
  for (std::size_t e = 0; e < num_examples(); ++e) count += RowError(e);
  return static_cast<double>(count) / static_cast<double>(num_examples());
}

OutcomeMatrix WatGapConstruction(std::size_t n) {
  Require(n >= 1, "gap construction needs n >= 1");
  std::vector<std::string> ids;
  ids.reserve(n);
  for (std::size_t i = 0; i < n; ++i) ids.push_back("attack_" + std::to_string(i + 1));
  OutcomeMatrix matrix(n, std::move(ids));
  for (std::size_t e = 0; e < n; ++e) {
    for (std::size_t a = 0; a < n; ++a) matrix.Record(e, a, e == a);
  }
  return matrix;
}

bool GoalMet(const Criterion& criterion, const CandidateScore& best) {
  switch (criterion.kind) {
    case CriterionKind::kMisclassify:
      return best.misclassified;
    case CriterionKind::kMaxConfidence:
      return best.misclassified && best.wrong_confidence > criterion.threshold;
    case CriterionKind::kMinNorm:
      return false;
  }
  return false;
}

std::vector<Assignment> Schedule(const BudgetPolicy& budget,
                                 const Criterion& criterion,
                                 std::span<ExampleProgress> progress,
                                 std::size_t num_attacks) {
  std::vector<Assignment> assignments;
  for (std::size_t e = 0; e < progress.size(); ++e) {
    ExampleProgress& p = progress[e];
    if (!p.active) continue;
    if (p.next_attack >= num_attacks) {
      p.active = false;
    } else if (budget.early_stop && p.best && GoalMet(criterion, *p.best)) {
      p.active = false;
      p.stopped_early = true;
    } else if (p.units_spent >= budget.max_attack_units_per_example) {
      p.active = false;
      p.budget_exhausted = true;
    } else {
      assignments.push_back({e, p.next_attack});
    }
  }
  return assignments;
}

std::size_t BundleResult::TotalUnits() const {
  std::size_t total = 0;
  for (const ExampleLog& log : computation_log) total += log.units_spent;
  return total;
}

std::uint64_t ScoringSeed(std::uint64_t root_seed, const Candidate& candidate) {
  return DeriveSeed(root_seed,
                    {0x73636f7265ULL,  // "score"
                     static_cast<std::uint64_t>(candidate.example_index),
                     StableHash(candidate.attack_id),
                     static_cast<std::uint64_t>(candidate.restart_index)});
}

BundleResult Bundle(const ModelParams& model, const Dataset& dataset,
                    const AttackList& attacks, const Criterion& criterion,
                    const BudgetPolicy& budget, std::uint64_t seed,
                    const BundleOptions& options) {
  Require(!dataset.empty(), "bundle needs a non-empty dataset");
  criterion.Validate();
  model.Validate();
  if (options.stochastic) options.stochastic->Validate();
  if (dataset.dimension() != model.input_dim) {
    Fail(ErrorKind::kShape, "dataset dimension does not match the model");
  }

  std::vector<std::string> ids;
  std::set<std::string> seen;
  BundleResult result;
  for (const auto& attack : attacks) {
    Require(attack != nullptr, "null attack in bundle");
    Require(attack->id() != kCleanAttackId,
            "attack id 'none' is reserved for the clean input");
    Require(seen.insert(attack->id()).second,
            "duplicate attack id '" + attack->id() + "'");
    ids.push_back(attack->id());
    result.epsilon_budget = std::max(result.epsilon_budget, attack->epsilon());
  }

  const std::size_t n = dataset.size();
  result.criterion = criterion;
  result.outcome_matrix = OutcomeMatrix(n, ids);
  result.chosen.resize(n);
  result.clean_scores.resize(n);
  result.computation_log.resize(n);

  auto score = [&](std::size_t e, const Candidate& c) {
    if (options.stochastic) {
      return ScoreStochastic(model, *options.stochastic, dataset[e], e, c,
                             ScoringSeed(seed, c));
    }
    return Score(model, dataset[e], e, c);
  };

  std::vector<ExampleProgress> progress(n);
  std::vector<std::vector<Candidate>> kept(n);
  for (std::size_t e = 0; e < n; ++e) {
    Candidate clean{e, dataset[e].features, std::string(kCleanAttackId), 0};
    const CandidateScore s = score(e, clean);
    result.clean_scores[e] = s;
    result.outcome_matrix.RecordClean(e, s.misclassified);
    progress[e].best = s;
    if (options.keep_candidates) kept[e].push_back(clean);
    result.chosen[e] = {std::move(clean), s};
  }

  while (true) {
    const std::vector<Assignment> round =
        Schedule(budget, criterion, progress, attacks.size());
    if (round.empty()) break;

    std::vector<UnitOutcome> outcomes(round.size());
    ParallelFor(round.size(), options.workers, [&](std::size_t i) {
      const Assignment& job = round[i];
      const Attack& attack = *attacks[job.attack_index];
      UnitOutcome& out = outcomes[i];
      out.run.attack_id = attack.id();
      try {
        std::vector<Candidate> candidates = attack.Generate(
            model, dataset[job.example_index], job.example_index, seed);
        out.run.candidates = candidates.size();
        for (Candidate& c : candidates) {
          Require(c.example_index == job.example_index,
                  "attack '" + attack.id() + "' returned a foreign candidate");
          const CandidateScore s = score(job.example_index, c);
          out.any_error = out.any_error || s.misclassified;
          if (!out.best || Beats(s, out.best->score, criterion)) {
            out.best = ChosenCandidate{c, s};
          }
        }
        if (options.keep_candidates) out.candidates = std::move(candidates);
      } catch (const Error& e) {
        out = UnitOutcome{};
        out.run.attack_id = attack.id();
        out.run.failed = true;
        out.run.error = e.what();
      }
    });

    for (std::size_t i = 0; i < round.size(); ++i) {
      const Assignment& job = round[i];
      const std::size_t e = job.example_index;
      UnitOutcome& out = outcomes[i];
      ExampleProgress& p = progress[e];
      p.next_attack = job.attack_index + 1;
      ++p.units_spent;
      result.outcome_matrix.Record(e, job.attack_index, out.any_error);
      if (out.best && Beats(out.best->score, result.chosen[e].score, criterion)) {
        result.chosen[e] = std::move(*out.best);
        p.best = result.chosen[e].score;
      }
      result.computation_log[e].runs.push_back(std::move(out.run));
      if (options.keep_candidates) {
        for (Candidate& c : out.candidates) kept[e].push_back(std::move(c));
      }
    }
  }

  for (std::size_t e = 0; e < n; ++e) {
    ExampleLog& log = result.computation_log[e];
    log.units_spent = progress[e].units_spent;
    log.stopped_early = progress[e].stopped_early;
    log.budget_exhausted = progress[e].budget_exhausted;
    if (options.keep_candidates) {
      for (Candidate& c : kept[e]) result.candidates.push_back(std::move(c));
    }
  }
  result.per_attack_error_rates.resize(attacks.size());
  for (std::size_t a = 0; a < attacks.size(); ++a) {
    result.per_attack_error_rates[a] = result.outcome_matrix.AttackErrorRate(a);
  }
  result.bundled_error_rate = result.outcome_matrix.BundledErrorRate();
  return result;
}

BundleResult Bundle(const ModelParams& model, const Dataset& dataset,
                    const std::vector<AttackConfig>& attacks,
                    const Criterion& criterion, const BudgetPolicy& budget,
                    std::uint64_t seed, const BundleOptions& options) {
  return Bundle(model, dataset, MakeAttacks(attacks), criterion, budget, seed,
                options);
}

}  // namespace bundling
