#ifndef BUNDLING_MODEL_H_
#define BUNDLING_MODEL_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bundling/rng.h"

namespace bundling {

using Vector = std::vector<double>;
using ConstVec = std::span<const double>;

// A clean input with features in [0, 1] and its true class.
struct Example {
  Vector features;
  std::size_t label = 0;

  bool operator==(const Example&) const = default;
};

class Dataset {
 public:
  Dataset() = default;
  // Validates that every example has `dimension` features in [0, 1] and a
  // label below `num_classes`. Throws kData on violation.
  Dataset(std::size_t dimension, std::size_t num_classes,
          std::vector<Example> examples);

  std::size_t dimension() const { return dimension_; }
  std::size_t num_classes() const { return num_classes_; }
  std::size_t size() const { return examples_.size(); }
  bool empty() const { return examples_.empty(); }
  const std::vector<Example>& examples() const { return examples_; }
  const Example& operator[](std::size_t i) const { return examples_[i]; }

  // Examples [begin, end) as a new dataset.
  Dataset Slice(std::size_t begin, std::size_t end) const;

  bool operator==(const Dataset&) const = default;

 private:
  std::size_t dimension_ = 0;
  std::size_t num_classes_ = 2;
  std::vector<Example> examples_;
};

enum class Architecture { kSoftmaxLinear, kMlp1 };

std::string_view ArchitectureName(Architecture arch);
// Accepts "softmax-linear" and "mlp1". Throws kParse otherwise.
Architecture ParseArchitecture(std::string_view name);

// Weights are row-major. For kSoftmaxLinear the hidden layer is empty and
// output_weights is k x d; for kMlp1 hidden_weights is h x d (ReLU) and
// output_weights is k x h.
struct ModelParams {
  Architecture architecture = Architecture::kSoftmaxLinear;
  std::size_t input_dim = 0;
  std::size_t num_classes = 0;
  std::size_t hidden = 0;
  Vector hidden_weights;
  Vector hidden_bias;
  Vector output_weights;
  Vector output_bias;

  static ModelParams Zeros(Architecture arch, std::size_t input_dim,
                           std::size_t num_classes, std::size_t hidden = 0);

  // Width of the layer feeding the softmax: d for linear, h for mlp1.
  std::size_t feature_width() const {
    return architecture == Architecture::kMlp1 ? hidden : input_dim;
  }

  // Throws kContract when shapes are inconsistent or any entry is not finite.
  void Validate() const;

  bool operator==(const ModelParams&) const = default;
};

struct Prediction {
  Vector probabilities;
  std::size_t predicted_class = 0;
  double confidence = 0.0;
};

// Probability floor applied before taking logs.
inline constexpr double kProbabilityFloor = 1e-12;

// Softmax with max-logit subtraction.
Vector Softmax(ConstVec logits);
// Index of the largest entry; the lowest index wins exact ties.
std::size_t ArgMax(ConstVec values);

Vector Logits(const ModelParams& params, ConstVec input);
Prediction Predict(const ModelParams& params, ConstVec input);

// Cross-entropy of `label` at `input`.
double Loss(const ModelParams& params, ConstVec input, std::size_t label);

// Gradient of Loss with respect to the input.
Vector InputGradient(const ModelParams& params, ConstVec input,
                     std::size_t label);

// Randomized model: each call adds Uniform(-noise_scale, noise_scale) noise
// to every coordinate, clips to [0, 1], and predicts.
struct StochasticSpec {
  double noise_scale = 0.0;
  std::size_t calls = 1;

  void Validate() const;
};

// In-place: x_i <- clamp(x_i + U(-scale, scale), 0, 1).
void AddClippedNoise(std::span<double> input, double scale, Rng& rng);

// Mean of `spec.calls` noisy predictions, renormalized. Calls draw noise
// sequentially from one Rng seeded with `seed`.
Prediction PredictStochastic(const ModelParams& params,
                             const StochasticSpec& spec, ConstVec input,
                             std::uint64_t seed);

struct Ensemble {
  std::vector<ModelParams> members;

  void Validate() const;
};

// Number of members whose predicted class differs from `true_label`.
std::size_t EnsembleFooledCount(const Ensemble& ensemble, ConstVec input,
                                std::size_t true_label);

struct TrainConfig {
  double learning_rate = 0.1;
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  std::uint64_t seed = 1;
  std::size_t hidden = 32;  // mlp1 only
  double weight_decay = 0.0;

  void Validate() const;
  bool operator==(const TrainConfig&) const = default;
};

struct TrainingTrace {
  double initial_loss = 0.0;
  std::vector<double> epoch_losses;  // mean cross-entropy after each epoch
};

// Mini-batch SGD on mean cross-entropy. Deterministic in config.seed.
// Throws kTrainingDiverged naming the epoch if the loss becomes non-finite.
ModelParams Train(const Dataset& dataset, Architecture arch,
                  const TrainConfig& config, TrainingTrace* trace = nullptr);

double MeanLoss(const ModelParams& params, const Dataset& dataset);
double ErrorRate(const ModelParams& params, const Dataset& dataset);

}  // namespace bundling

#endif  // BUNDLING_MODEL_H_
