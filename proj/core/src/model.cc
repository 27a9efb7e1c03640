#include "bundling/model.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "bundling/error.h"

namespace bundling {
namespace {

void CheckInput(const ModelParams& params, ConstVec input) {
  if (input.size() != params.input_dim) {
    Fail(ErrorKind::kShape, "input has " + std::to_string(input.size()) +
                                " features, model expects " +
                                std::to_string(params.input_dim));
  }
  for (double v : input) {
    Require(std::isfinite(v), "input contains a non-finite value");
  }
}

// out[r] = bias[r] + sum_c weights[r * cols + c] * in[c]
void Affine(const Vector& weights, const Vector& bias, ConstVec in,
            std::span<double> out) {
  const std::size_t cols = in.size();
  for (std::size_t r = 0; r < out.size(); ++r) {
    const double* row = weights.data() + r * cols;
    double sum = bias[r];
    for (std::size_t c = 0; c < cols; ++c) sum += row[c] * in[c];
    out[r] = sum;
  }
}

// out[c] = sum_r weights[r * cols + c] * in[r]
void AffineTransposed(const Vector& weights, ConstVec in,
                      std::span<double> out) {
  const std::size_t cols = out.size();
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t r = 0; r < in.size(); ++r) {
    const double* row = weights.data() + r * cols;
    const double scale = in[r];
    if (scale == 0.0) continue;
    for (std::size_t c = 0; c < cols; ++c) out[c] += row[c] * scale;
  }
}

struct ForwardPass {
  Vector hidden_pre;  // mlp1 only
  Vector features;    // input (linear) or ReLU activations (mlp1)
  Vector logits;
  Vector probabilities;
};

ForwardPass Forward(const ModelParams& params, ConstVec input) {
  ForwardPass pass;
  if (params.architecture == Architecture::kMlp1) {
    pass.hidden_pre.resize(params.hidden);
    Affine(params.hidden_weights, params.hidden_bias, input, pass.hidden_pre);
    pass.features.resize(params.hidden);
    for (std::size_t j = 0; j < params.hidden; ++j) {
      pass.features[j] = std::max(pass.hidden_pre[j], 0.0);
    }
  } else {
    pass.features.assign(input.begin(), input.end());
  }
  pass.logits.resize(params.num_classes);
  Affine(params.output_weights, params.output_bias, pass.features,
         pass.logits);
  pass.probabilities = Softmax(pass.logits);
  return pass;
}

// Cross-entropy gradient with respect to the logits: p - onehot(label).
Vector LogitGradient(const ForwardPass& pass, std::size_t label) {
  Vector grad = pass.probabilities;
  grad[label] -= 1.0;
  return grad;
}

// Gradient with respect to the pre-softmax feature layer, then back through
// the ReLU for mlp1. Returns the gradient at the hidden pre-activations for
// mlp1, or at the input for linear models.
Vector BackToFeatures(const ModelParams& params, const ForwardPass& pass,
                      ConstVec logit_grad) {
  Vector feature_grad(params.feature_width());
  AffineTransposed(params.output_weights, logit_grad, feature_grad);
  if (params.architecture == Architecture::kMlp1) {
    for (std::size_t j = 0; j < params.hidden; ++j) {
      if (pass.hidden_pre[j] <= 0.0) feature_grad[j] = 0.0;
    }
  }
  return feature_grad;
}

bool AllFinite(const Vector& values) {
  return std::all_of(values.begin(), values.end(),
                     [](double v) { return std::isfinite(v); });
}

}  // namespace

Dataset::Dataset(std::size_t dimension, std::size_t num_classes,
                 std::vector<Example> examples)
    : dimension_(dimension),
      num_classes_(num_classes),
      examples_(std::move(examples)) {
  if (num_classes_ < 2) Fail(ErrorKind::kData, "dataset needs at least 2 classes");
  for (std::size_t i = 0; i < examples_.size(); ++i) {
    const Example& ex = examples_[i];
    const std::string where = "example " + std::to_string(i);
    if (ex.features.size() != dimension_) {
      Fail(ErrorKind::kData, where + " has " +
                                 std::to_string(ex.features.size()) +
                                 " features, expected " +
                                 std::to_string(dimension_));
    }
    if (ex.label >= num_classes_) {
      Fail(ErrorKind::kData, where + " has label " + std::to_string(ex.label) +
                                 " outside [0, " +
                                 std::to_string(num_classes_) + ")");
    }
    for (double v : ex.features) {
      if (!(v >= 0.0 && v <= 1.0)) {
        Fail(ErrorKind::kData, where + " has a feature outside [0, 1]");
      }
    }
  }
}

Dataset Dataset::Slice(std::size_t begin, std::size_t end) const {
  Require(begin <= end && end <= examples_.size(), "slice out of range");
  return Dataset(dimension_, num_classes_,
                 std::vector<Example>(examples_.begin() + begin,
                                      examples_.begin() + end));
}

std::string_view ArchitectureName(Architecture arch) {
  return arch == Architecture::kMlp1 ? "mlp1" : "softmax-linear";
}

Architecture ParseArchitecture(std::string_view name) {
  if (name == "softmax-linear") return Architecture::kSoftmaxLinear;
  if (name == "mlp1") return Architecture::kMlp1;
  Fail(ErrorKind::kParse, "unknown architecture '" + std::string(name) + "'");
}

ModelParams ModelParams::Zeros(Architecture arch, std::size_t input_dim,
                               std::size_t num_classes, std::size_t hidden) {
  ModelParams params;
  params.architecture = arch;
  params.input_dim = input_dim;
  params.num_classes = num_classes;
  if (arch == Architecture::kMlp1) {
    params.hidden = hidden;
    params.hidden_weights.assign(hidden * input_dim, 0.0);
    params.hidden_bias.assign(hidden, 0.0);
  }
  params.output_weights.assign(num_classes * params.feature_width(), 0.0);
  params.output_bias.assign(num_classes, 0.0);
  return params;
}

void ModelParams::Validate() const {
  Require(input_dim >= 1, "model input dimension must be positive");
  Require(num_classes >= 2, "model needs at least 2 classes");
  if (architecture == Architecture::kMlp1) {
    Require(hidden >= 1, "mlp1 hidden width must be positive");
    Require(hidden_weights.size() == hidden * input_dim,
            "hidden weight shape mismatch");
    Require(hidden_bias.size() == hidden, "hidden bias shape mismatch");
  } else {
    Require(hidden == 0 && hidden_weights.empty() && hidden_bias.empty(),
            "softmax-linear model must not carry hidden parameters");
  }
  Require(output_weights.size() == num_classes * feature_width(),
          "output weight shape mismatch");
  Require(output_bias.size() == num_classes, "output bias shape mismatch");
  Require(AllFinite(hidden_weights) && AllFinite(hidden_bias) &&
              AllFinite(output_weights) && AllFinite(output_bias),
          "model parameters must be finite");
}

Vector Softmax(ConstVec logits) {
  const double max_logit = *std::max_element(logits.begin(), logits.end());
  Vector probs(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    probs[i] = std::exp(logits[i] - max_logit);
    total += probs[i];
  }
  for (double& p : probs) p /= total;
  return probs;
}

std::size_t ArgMax(ConstVec values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

Vector Logits(const ModelParams& params, ConstVec input) {
  CheckInput(params, input);
  return Forward(params, input).logits;
}

Prediction Predict(const ModelParams& params, ConstVec input) {
  CheckInput(params, input);
  Prediction pred;
  pred.probabilities = Forward(params, input).probabilities;
  pred.predicted_class = ArgMax(pred.probabilities);
  pred.confidence = pred.probabilities[pred.predicted_class];
  return pred;
}

double Loss(const ModelParams& params, ConstVec input, std::size_t label) {
  CheckInput(params, input);
  Require(label < params.num_classes, "label out of range");
  const ForwardPass pass = Forward(params, input);
  return -std::log(std::max(pass.probabilities[label], kProbabilityFloor));
}

Vector InputGradient(const ModelParams& params, ConstVec input,
                     std::size_t label) {
  CheckInput(params, input);
  Require(label < params.num_classes, "label out of range");
  const ForwardPass pass = Forward(params, input);
  const Vector logit_grad = LogitGradient(pass, label);
  Vector grad = BackToFeatures(params, pass, logit_grad);
  if (params.architecture == Architecture::kMlp1) {
    Vector input_grad(params.input_dim);
    AffineTransposed(params.hidden_weights, grad, input_grad);
    return input_grad;
  }
  return grad;
}

void StochasticSpec::Validate() const {
  Require(std::isfinite(noise_scale) && noise_scale >= 0.0,
          "noise_scale must be finite and non-negative");
  Require(calls >= 1, "stochastic model needs at least one call");
}

void AddClippedNoise(std::span<double> input, double scale, Rng& rng) {
  for (double& v : input) {
    v = std::clamp(v + rng.Uniform(-scale, scale), 0.0, 1.0);
  }
}

Prediction PredictStochastic(const ModelParams& params,
                             const StochasticSpec& spec, ConstVec input,
                             std::uint64_t seed) {
  CheckInput(params, input);
  spec.Validate();
  Rng rng(seed);
  Vector mean(params.num_classes, 0.0);
  Vector noisy(input.size());
  for (std::size_t call = 0; call < spec.calls; ++call) {
    std::copy(input.begin(), input.end(), noisy.begin());
    AddClippedNoise(noisy, spec.noise_scale, rng);
    const Vector probs = Forward(params, noisy).probabilities;
    for (std::size_t c = 0; c < mean.size(); ++c) mean[c] += probs[c];
  }
  const double total = std::accumulate(mean.begin(), mean.end(), 0.0);
  for (double& p : mean) p /= total;
  Prediction pred;
  pred.probabilities = std::move(mean);
  pred.predicted_class = ArgMax(pred.probabilities);
  pred.confidence = pred.probabilities[pred.predicted_class];
  return pred;
}

void Ensemble::Validate() const {
  Require(!members.empty(), "ensemble needs at least one member");
  for (const ModelParams& m : members) {
    Require(m.input_dim == members.front().input_dim &&
                m.num_classes == members.front().num_classes,
            "ensemble members must share input and class dimensions");
  }
}

std::size_t EnsembleFooledCount(const Ensemble& ensemble, ConstVec input,
                                std::size_t true_label) {
  ensemble.Validate();
  std::size_t fooled = 0;
  for (const ModelParams& member : ensemble.members) {
    if (Predict(member, input).predicted_class != true_label) ++fooled;
  }
  return fooled;
}

void TrainConfig::Validate() const {
  Require(std::isfinite(learning_rate) && learning_rate > 0.0,
          "learning rate must be positive");
  Require(epochs >= 1, "epochs must be positive");
  Require(batch_size >= 1, "batch size must be positive");
  Require(std::isfinite(weight_decay) && weight_decay >= 0.0,
          "weight decay must be non-negative");
}

double MeanLoss(const ModelParams& params, const Dataset& dataset) {
  double total = 0.0;
  for (const Example& ex : dataset.examples()) {
    total += Loss(params, ex.features, ex.label);
  }
  return dataset.empty() ? 0.0 : total / static_cast<double>(dataset.size());
}

double ErrorRate(const ModelParams& params, const Dataset& dataset) {
  std::size_t wrong = 0;
  for (const Example& ex : dataset.examples()) {
    if (Predict(params, ex.features).predicted_class != ex.label) ++wrong;
  }
  return dataset.empty() ? 0.0
                         : static_cast<double>(wrong) /
                               static_cast<double>(dataset.size());
}

ModelParams Train(const Dataset& dataset, Architecture arch,
                  const TrainConfig& config, TrainingTrace* trace) {
  Require(!dataset.empty(), "cannot train on an empty dataset");
  config.Validate();
  if (arch == Architecture::kMlp1) {
    Require(config.hidden >= 1, "mlp1 hidden width must be positive");
  }

  Rng rng(config.seed);
  ModelParams params = ModelParams::Zeros(arch, dataset.dimension(),
                                          dataset.num_classes(), config.hidden);
  // Glorot-uniform init for mlp1; the linear model starts at zero.
  if (arch == Architecture::kMlp1) {
    const double hidden_limit = std::sqrt(
        6.0 / static_cast<double>(params.input_dim + params.hidden));
    for (double& w : params.hidden_weights) {
      w = rng.Uniform(-hidden_limit, hidden_limit);
    }
    const double output_limit = std::sqrt(
        6.0 / static_cast<double>(params.hidden + params.num_classes));
    for (double& w : params.output_weights) {
      w = rng.Uniform(-output_limit, output_limit);
    }
  }

  if (trace != nullptr) {
    trace->initial_loss = MeanLoss(params, dataset);
    trace->epoch_losses.clear();
  }

  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  const std::size_t width = params.feature_width();
  ModelParams grad = ModelParams::Zeros(arch, params.input_dim,
                                        params.num_classes, params.hidden);
  auto zero = [](Vector& v) { std::fill(v.begin(), v.end(), 0.0); };

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.Shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < order.size();
         start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      zero(grad.hidden_weights);
      zero(grad.hidden_bias);
      zero(grad.output_weights);
      zero(grad.output_bias);

      for (std::size_t b = start; b < stop; ++b) {
        const Example& ex = dataset[order[b]];
        const ForwardPass pass = Forward(params, ex.features);
        const Vector logit_grad = LogitGradient(pass, ex.label);
        for (std::size_t c = 0; c < params.num_classes; ++c) {
          grad.output_bias[c] += logit_grad[c];
          double* row = grad.output_weights.data() + c * width;
          for (std::size_t j = 0; j < width; ++j) {
            row[j] += logit_grad[c] * pass.features[j];
          }
        }
        if (arch == Architecture::kMlp1) {
          const Vector hidden_grad = BackToFeatures(params, pass, logit_grad);
          for (std::size_t j = 0; j < params.hidden; ++j) {
            if (hidden_grad[j] == 0.0) continue;
            grad.hidden_bias[j] += hidden_grad[j];
            double* row = grad.hidden_weights.data() + j * params.input_dim;
            for (std::size_t i = 0; i < params.input_dim; ++i) {
              row[i] += hidden_grad[j] * ex.features[i];
            }
          }
        }
      }

      const double step =
          config.learning_rate / static_cast<double>(stop - start);
      auto apply = [&](Vector& weights, const Vector& g, bool decay) {
        for (std::size_t i = 0; i < weights.size(); ++i) {
          double update = step * g[i];
          if (decay) update += config.learning_rate * config.weight_decay * weights[i];
          weights[i] -= update;
        }
      };
      apply(params.hidden_weights, grad.hidden_weights, true);
      apply(params.hidden_bias, grad.hidden_bias, false);
      apply(params.output_weights, grad.output_weights, true);
      apply(params.output_bias, grad.output_bias, false);
    }

    const double loss = MeanLoss(params, dataset);
    if (!std::isfinite(loss) || !AllFinite(params.output_weights) ||
        !AllFinite(params.hidden_weights)) {
      Fail(ErrorKind::kTrainingDiverged,
           "training diverged at epoch " + std::to_string(epoch));
    }
    if (trace != nullptr) trace->epoch_losses.push_back(loss);
  }
  return params;
}

}  // namespace bundling
