#ifndef BUNDLING_ATTACKS_H_
#define BUNDLING_ATTACKS_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bundling/model.h"

namespace bundling {

enum class AttackVariant { kFgsm, kPgd, kUniformNoise };

std::string_view AttackVariantName(AttackVariant variant);
// "fgsm", "pgd" or "uniform_noise"; throws kParse otherwise.
AttackVariant ParseAttackVariant(std::string_view name);

// Declarative L-infinity attack. Fields irrelevant to `variant` are ignored.
struct AttackConfig {
  std::string attack_id;
  AttackVariant variant = AttackVariant::kPgd;
  double epsilon = 0.3;
  double step_size = 0.1;       // pgd
  std::size_t num_steps = 40;   // pgd
  std::size_t num_restarts = 1; // pgd
  bool random_init = true;      // pgd
  std::size_t num_samples = 100;  // uniform_noise

  // Random stream shared by every restart of this attack. Defaults to a hash
  // of attack_id. Giving several single-restart configs the same stream and
  // consecutive first_restart values reproduces one multi-restart config.
  std::optional<std::uint64_t> seed_stream;
  std::size_t first_restart = 0;

  std::uint64_t stream() const;
  void Validate() const;

  bool operator==(const AttackConfig&) const = default;
};

struct Candidate {
  std::size_t example_index = 0;
  Vector adversarial_input;
  std::string attack_id;
  std::size_t restart_index = 0;

  bool operator==(const Candidate&) const = default;
};

// Clamp every coordinate to [max(clean - eps, 0), min(clean + eps, 1)].
Vector Project(ConstVec input, ConstVec clean, double epsilon);

// L-infinity distance.
double LinfDistance(ConstVec a, ConstVec b);

// True when the candidate lies in [0, 1]^d and within epsilon (+1e-9) of
// clean.
bool IsFeasible(const Candidate& candidate, ConstVec clean, double epsilon);

// Seed of restart `restart_index` given the per-(example, attack) seed.
std::uint64_t RestartSeed(std::uint64_t attack_seed, std::size_t restart_index);

// One signed-gradient step of size epsilon, then projection. sign(0) = 0.
Candidate Fgsm(const ModelParams& model, const Example& example,
               std::size_t example_index, double epsilon,
               std::string attack_id = "fgsm");

// Per-step losses of each restart, filled when requested (entry 0 is the
// loss at the starting point).
using PgdTrace = std::vector<std::vector<double>>;

// Randomly restarted projected signed-gradient ascent on the cross-entropy
// of the true label. Returns one candidate per restart with restart_index
// first_restart, first_restart + 1, ...
std::vector<Candidate> Pgd(const ModelParams& model, const Example& example,
                           std::size_t example_index,
                           const AttackConfig& config, std::uint64_t seed,
                           PgdTrace* trace = nullptr);

// num_samples draws of project(clean + U(-eps, eps)^d).
std::vector<Candidate> UniformNoise(const Example& example,
                                    std::size_t example_index, double epsilon,
                                    std::size_t num_samples,
                                    std::uint64_t seed,
                                    std::string attack_id = "uniform_noise");

// Seed handed to an attack for one example: DeriveSeed(root, {index, stream}).
std::uint64_t AttackSeed(std::uint64_t root_seed, std::size_t example_index,
                         const AttackConfig& config);

// Dispatches on config.variant using AttackSeed.
std::vector<Candidate> RunAttack(const ModelParams& model,
                                 const Example& example,
                                 std::size_t example_index,
                                 const AttackConfig& config,
                                 std::uint64_t root_seed);

// Anything that turns a clean example into candidates. The bundler only
// sees this interface, so query-only or externally computed attacks plug in
// the same way as the gradient attacks below.
class Attack {
 public:
  virtual ~Attack() = default;
  virtual const std::string& id() const = 0;
  // Largest L-infinity distance a candidate may have from its clean input.
  virtual double epsilon() const = 0;
  virtual std::vector<Candidate> Generate(const ModelParams& model,
                                          const Example& example,
                                          std::size_t example_index,
                                          std::uint64_t root_seed) const = 0;
};

class ConfiguredAttack final : public Attack {
 public:
  explicit ConfiguredAttack(AttackConfig config);

  const std::string& id() const override { return config_.attack_id; }
  double epsilon() const override { return config_.epsilon; }
  const AttackConfig& config() const { return config_; }
  std::vector<Candidate> Generate(const ModelParams& model,
                                  const Example& example,
                                  std::size_t example_index,
                                  std::uint64_t root_seed) const override;

 private:
  AttackConfig config_;
};

using AttackList = std::vector<std::shared_ptr<const Attack>>;

AttackList MakeAttacks(const std::vector<AttackConfig>& configs);

// example_index,attack_id,restart_index,x0,...,x{d-1}
void WriteCandidatesCsv(std::ostream& out,
                        std::span<const Candidate> candidates);

}  // namespace bundling

#endif  // BUNDLING_ATTACKS_H_
