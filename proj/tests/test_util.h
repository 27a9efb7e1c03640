#ifndef BUNDLING_TESTS_TEST_UTIL_H_
#define BUNDLING_TESTS_TEST_UTIL_H_

// Generators and independent oracles shared by the unit and acceptance
// suites. Nothing here calls into the attack or selection code it checks.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "bundling/model.h"

namespace bundling::testing {

inline ModelParams RandomModel(Architecture arch, std::size_t d, std::size_t k,
                               std::size_t hidden, std::uint64_t seed,
                               double scale = 1.0) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, scale);
  ModelParams m = ModelParams::Zeros(arch, d, k, hidden);
  for (double& w : m.hidden_weights) w = normal(gen);
  for (double& w : m.hidden_bias) w = normal(gen);
  for (double& w : m.output_weights) w = normal(gen);
  for (double& w : m.output_bias) w = normal(gen);
  return m;
}

inline Vector RandomInput(std::size_t d, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vector x(d);
  for (double& v : x) v = u(gen);
  return x;
}

// Two-class linear model with class-1 weights `w` and class-0 weights zero.
inline ModelParams BinaryLinear(const Vector& w, double bias = 0.0) {
  ModelParams m = ModelParams::Zeros(Architecture::kSoftmaxLinear, w.size(), 2);
  std::copy(w.begin(), w.end(), m.output_weights.begin() + w.size());
  m.output_bias[1] = bias;
  return m;
}

inline double Sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Hand-written logistic cross-entropy of a BinaryLinear model.
inline double BinaryLoss(const Vector& w, double bias, const Vector& x,
                         std::size_t label) {
  double z = bias;
  for (std::size_t i = 0; i < w.size(); ++i) z += w[i] * x[i];
  const double p1 = Sigmoid(z);
  const double p = label == 1 ? p1 : 1.0 - p1;
  return -std::log(std::max(p, 1e-12));
}

// Maximum BinaryLoss over every corner of the box
// [max(clean - eps, 0), min(clean + eps, 1)].
inline double CornerOracleMaxLoss(const Vector& w, double bias,
                                  const Vector& clean, std::size_t label,
                                  double eps) {
  const std::size_t d = clean.size();
  double best = -1.0;
  Vector x(d);
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << d); ++mask) {
    for (std::size_t i = 0; i < d; ++i) {
      const double lo = std::max(clean[i] - eps, 0.0);
      const double hi = std::min(clean[i] + eps, 1.0);
      x[i] = (mask >> i) & 1 ? hi : lo;
    }
    best = std::max(best, BinaryLoss(w, bias, x, label));
  }
  return best;
}

// Central finite differences of Loss.
inline Vector FiniteDifferenceGradient(const ModelParams& m, const Vector& x,
                                       std::size_t label, double h = 1e-5) {
  Vector g(x.size());
  Vector probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double up = Loss(m, probe, label);
    probe[i] = x[i] - h;
    const double down = Loss(m, probe, label);
    probe[i] = x[i];
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

// max_i |a_i - b_i| / max(max_i |a_i|, 1e-8)
inline double RelativeError(const Vector& analytic, const Vector& reference) {
  double diff = 0.0;
  double scale = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff = std::max(diff, std::abs(analytic[i] - reference[i]));
    scale = std::max(scale, std::abs(analytic[i]));
  }
  return diff / std::max(scale, 1e-8);
}

// Probabilities by direct evaluation of the model definition: explicit
// loops and a plain softmax without any shared helper.
inline Vector ReferenceProbabilities(const ModelParams& m, const Vector& x) {
  Vector features = x;
  if (m.architecture == Architecture::kMlp1) {
    features.assign(m.hidden, 0.0);
    for (std::size_t j = 0; j < m.hidden; ++j) {
      double a = m.hidden_bias[j];
      for (std::size_t i = 0; i < m.input_dim; ++i) {
        a += m.hidden_weights[j * m.input_dim + i] * x[i];
      }
      features[j] = a > 0.0 ? a : 0.0;
    }
  }
  Vector z(m.num_classes);
  double top = -1e300;
  for (std::size_t c = 0; c < m.num_classes; ++c) {
    z[c] = m.output_bias[c];
    for (std::size_t j = 0; j < features.size(); ++j) {
      z[c] += m.output_weights[c * features.size() + j] * features[j];
    }
    top = std::max(top, z[c]);
  }
  double total = 0.0;
  for (double& v : z) total += (v = std::exp(v - top));
  for (double& v : z) v /= total;
  return z;
}

inline std::size_t ReferenceArgMax(const Vector& p) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < p.size(); ++i) {
    if (p[i] > p[best]) best = i;
  }
  return best;
}

}  // namespace bundling::testing

#endif  // BUNDLING_TESTS_TEST_UTIL_H_
