#include "bundling/attacks.h"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "bundling/error.h"
#include "bundling/format.h"
#include "bundling/rng.h"

namespace bundling {
namespace {

constexpr double kFeasibilitySlack = 1e-9;

double Sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

Vector CheckedGradient(const ModelParams& model, ConstVec input,
                       std::size_t label, std::size_t example_index,
                       const std::string& where) {
  Vector grad = InputGradient(model, input, label);
  for (double g : grad) {
    if (!std::isfinite(g)) {
      throw AttackFailedError(example_index,
                              "non-finite gradient on example " +
                                  std::to_string(example_index) + " " + where);
    }
  }
  return grad;
}

void CheckEpsilon(double epsilon) {
  Require(std::isfinite(epsilon) && epsilon > 0.0,
          "epsilon must be finite and positive");
}

}  // namespace

std::string_view AttackVariantName(AttackVariant variant) {
  switch (variant) {
    case AttackVariant::kFgsm:
      return "fgsm";
    case AttackVariant::kPgd:
      return "pgd";
    case AttackVariant::kUniformNoise:
      return "uniform_noise";
  }
  return "pgd";
}

AttackVariant ParseAttackVariant(std::string_view name) {
  if (name == "fgsm") return AttackVariant::kFgsm;
  if (name == "pgd") return AttackVariant::kPgd;
  if (name == "uniform_noise") return AttackVariant::kUniformNoise;
  Fail(ErrorKind::kParse, "unknown attack variant '" + std::string(name) + "'");
}

std::uint64_t AttackConfig::stream() const {
  return seed_stream.value_or(StableHash(attack_id));
}

void AttackConfig::Validate() const {
  const std::string who = "attack '" + attack_id + "': ";
  Require(!attack_id.empty(), "attack_id must not be empty");
  Require(attack_id != "none", who + "'none' is reserved for the clean input");
  Require(std::isfinite(epsilon) && epsilon > 0.0,
          who + "epsilon must be finite and positive");
  switch (variant) {
    case AttackVariant::kFgsm:
      break;
    case AttackVariant::kPgd:
      Require(std::isfinite(step_size) && step_size > 0.0,
              who + "step_size must be finite and positive");
      Require(num_restarts >= 1, who + "num_restarts must be positive");
      break;
    case AttackVariant::kUniformNoise:
      Require(num_samples >= 1, who + "num_samples must be positive");
      break;
  }
}

Vector Project(ConstVec input, ConstVec clean, double epsilon) {
  if (input.size() != clean.size()) {
    Fail(ErrorKind::kShape, "projection: input and clean dimensions differ");
  }
  Vector out(input.size());
  for (std::size_t i = 0; i < input.size(); ++i) {
    const double lo = std::max(clean[i] - epsilon, 0.0);
    const double hi = std::max(lo, std::min(clean[i] + epsilon, 1.0));
    out[i] = std::clamp(input[i], lo, hi);
  }
  return out;
}

double LinfDistance(ConstVec a, ConstVec b) {
  if (a.size() != b.size()) {
    Fail(ErrorKind::kShape, "distance: dimensions differ");
  }
  double dist = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dist = std::max(dist, std::abs(a[i] - b[i]));
  }
  return dist;
}

bool IsFeasible(const Candidate& candidate, ConstVec clean, double epsilon) {
  const Vector& x = candidate.adversarial_input;
  if (x.size() != clean.size()) return false;
  for (double v : x) {
    if (!(v >= 0.0 && v <= 1.0)) return false;
  }
  return LinfDistance(x, clean) <= epsilon + kFeasibilitySlack;
}

std::uint64_t RestartSeed(std::uint64_t attack_seed,
                          std::size_t restart_index) {
  return DeriveSeed(attack_seed, {static_cast<std::uint64_t>(restart_index)});
}

Candidate Fgsm(const ModelParams& model, const Example& example,
               std::size_t example_index, double epsilon,
               std::string attack_id) {
  CheckEpsilon(epsilon);
  const Vector grad = CheckedGradient(model, example.features, example.label,
                                      example_index, "in fgsm");
  Vector stepped = example.features;
  for (std::size_t i = 0; i < stepped.size(); ++i) {
    stepped[i] += epsilon * Sign(grad[i]);
  }
  return Candidate{example_index,
                   Project(stepped, example.features, epsilon),
                   std::move(attack_id), 0};
}

std::vector<Candidate> Pgd(const ModelParams& model, const Example& example,
                           std::size_t example_index,
                           const AttackConfig& config, std::uint64_t seed,
                           PgdTrace* trace) {
  Require(config.variant == AttackVariant::kPgd, "pgd called with a non-pgd config");
  config.Validate();
  const Vector& clean = example.features;
  if (trace != nullptr) trace->assign(config.num_restarts, {});

  std::vector<Candidate> candidates;
  candidates.reserve(config.num_restarts);
  for (std::size_t r = 0; r < config.num_restarts; ++r) {
    const std::size_t restart_index = config.first_restart + r;
    Rng rng(RestartSeed(seed, restart_index));
    Vector x = clean;
    if (config.random_init) {
      for (double& v : x) v += rng.Uniform(-config.epsilon, config.epsilon);
      x = Project(x, clean, config.epsilon);
    }
    if (trace != nullptr) {
      (*trace)[r].push_back(Loss(model, x, example.label));
    }
    for (std::size_t step = 0; step < config.num_steps; ++step) {
      const Vector grad = CheckedGradient(
          model, x, example.label, example_index,
          "at step " + std::to_string(step) + " of restart " +
              std::to_string(restart_index));
      for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] += config.step_size * Sign(grad[i]);
      }
      x = Project(x, clean, config.epsilon);
      if (trace != nullptr) {
        (*trace)[r].push_back(Loss(model, x, example.label));
      }
    }
    candidates.push_back(
        Candidate{example_index, std::move(x), config.attack_id, restart_index});
  }
  return candidates;
}

std::vector<Candidate> UniformNoise(const Example& example,
                                    std::size_t example_index, double epsilon,
                                    std::size_t num_samples,
                                    std::uint64_t seed,
                                    std::string attack_id) {
  CheckEpsilon(epsilon);
  Require(num_samples >= 1, "uniform noise needs at least one sample");
  const Vector& clean = example.features;
  Rng rng(seed);
  std::vector<Candidate> candidates;
  candidates.reserve(num_samples);
  for (std::size_t s = 0; s < num_samples; ++s) {
    Vector x = clean;
    for (double& v : x) v += rng.Uniform(-epsilon, epsilon);
    candidates.push_back(
        Candidate{example_index, Project(x, clean, epsilon), attack_id, s});
  }
  return candidates;
}

std::uint64_t AttackSeed(std::uint64_t root_seed, std::size_t example_index,
                         const AttackConfig& config) {
  return DeriveSeed(root_seed,
                    {static_cast<std::uint64_t>(example_index), config.stream()});
}

std::vector<Candidate> RunAttack(const ModelParams& model,
                                 const Example& example,
                                 std::size_t example_index,
                                 const AttackConfig& config,
                                 std::uint64_t root_seed) {
  config.Validate();
  const std::uint64_t seed = AttackSeed(root_seed, example_index, config);
  switch (config.variant) {
    case AttackVariant::kFgsm: {
      Candidate c = Fgsm(model, example, example_index, config.epsilon,
                         config.attack_id);
      c.restart_index = config.first_restart;
      return {std::move(c)};
    }
    case AttackVariant::kPgd:
      return Pgd(model, example, example_index, config, seed);
    case AttackVariant::kUniformNoise:
      return UniformNoise(example, example_index, config.epsilon,
                          config.num_samples, seed, config.attack_id);
  }
  return {};
}

ConfiguredAttack::ConfiguredAttack(AttackConfig config)
    : config_(std::move(config)) {
  config_.Validate();
}

std::vector<Candidate> ConfiguredAttack::Generate(
    const ModelParams& model, const Example& example,
    std::size_t example_index, std::uint64_t root_seed) const {
  return RunAttack(model, example, example_index, config_, root_seed);
}

AttackList MakeAttacks(const std::vector<AttackConfig>& configs) {
  AttackList attacks;
  attacks.reserve(configs.size());
  for (const AttackConfig& config : configs) {
    attacks.push_back(std::make_shared<ConfiguredAttack>(config));
  }
  return attacks;
}

void WriteCandidatesCsv(std::ostream& out,
                        std::span<const Candidate> candidates) {
  const std::size_t d =
      candidates.empty() ? 0 : candidates.front().adversarial_input.size();
  out << "example_index,attack_id,restart_index";
  for (std::size_t j = 0; j < d; ++j) out << ",x" << j;
  out << '\n';
  for (const Candidate& c : candidates) {
    out << c.example_index << ',' << c.attack_id << ',' << c.restart_index;
    for (double v : c.adversarial_input) out << ',' << FormatDouble(v);
    out << '\n';
  }
}

}  // namespace bundling
