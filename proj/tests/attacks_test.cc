#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "bundling/attacks.h"
#include "bundling/data.h"
#include "bundling/error.h"
#include "test_util.h"

namespace bundling {
namespace {

using testing::BinaryLinear;
using testing::RandomInput;
using testing::RandomModel;

AttackConfig PgdConfig(double eps, double step, std::size_t steps,
                       std::size_t restarts, bool random_init = true) {
  AttackConfig c;
  c.attack_id = "pgd";
  c.variant = AttackVariant::kPgd;
  c.epsilon = eps;
  c.step_size = step;
  c.num_steps = steps;
  c.num_restarts = restarts;
  c.random_init = random_init;
  return c;
}

TEST(ProjectTest, FeasibleInputUnchanged) {
  const Vector clean{0.5, 0.2, 0.9};
  const Vector x{0.6, 0.0, 1.0};
  EXPECT_EQ(Project(x, clean, 0.3), x);
}

TEST(ProjectTest, ClampsToEpsilonBox) {
  EXPECT_DOUBLE_EQ(Project(Vector{0.95}, Vector{0.5}, 0.3)[0], 0.8);
}

TEST(ProjectTest, RangeClipDominatesBelowZero) {
  EXPECT_EQ(Project(Vector{-0.5}, Vector{0.1}, 0.3)[0], 0.0);
}

TEST(ProjectTest, IdempotentOnRandomVectors) {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> wide(-1.0, 2.0);
  for (int i = 0; i < 1000; ++i) {
    const Vector clean = RandomInput(6, gen);
    Vector x(6);
    for (double& v : x) v = wide(gen);
    const double eps = 0.01 + 0.5 * std::uniform_real_distribution<double>()(gen);
    const Vector once = Project(x, clean, eps);
    ASSERT_EQ(Project(once, clean, eps), once);
    ASSERT_TRUE(IsFeasible(Candidate{0, once, "p", 0}, clean, eps));
  }
}

TEST(ProjectTest, DimensionMismatchIsShapeError) {
  try {
    Project(Vector{0.1, 0.2}, Vector{0.1}, 0.3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kShape);
  }
}

TEST(FgsmTest, ZeroWeightModelLeavesInputUnchanged) {
  const ModelParams m = ModelParams::Zeros(Architecture::kMlp1, 3, 2, 4);
  const Example ex{{0.2, 0.5, 0.8}, 1};
  EXPECT_EQ(Fgsm(m, ex, 0, 0.3).adversarial_input, ex.features);
}

TEST(FgsmTest, OptimalOnBinaryLinearModels) {
  std::mt19937_64 gen(21);
  std::normal_distribution<double> normal(0.0, 2.0);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t d = 1 + trial % 12;
    Vector w(d);
    for (double& v : w) v = normal(gen);
    const double bias = normal(gen);
    const Example ex{RandomInput(d, gen), static_cast<std::size_t>(trial % 2)};
    const Candidate c = Fgsm(BinaryLinear(w, bias), ex, 0, 0.3);
    const double oracle = testing::CornerOracleMaxLoss(w, bias, ex.features, ex.label, 0.3);
    EXPECT_NEAR(testing::BinaryLoss(w, bias, c.adversarial_input, ex.label), oracle, 1e-9)
        << "trial " << trial;
  }
}

TEST(FgsmTest, OutputsAlwaysFeasible) {
  std::mt19937_64 gen(5);
  for (int i = 0; i < 1000; ++i) {
    const ModelParams m = RandomModel(Architecture::kMlp1, 5, 3, 6, i);
    const Example ex{RandomInput(5, gen), static_cast<std::size_t>(i % 3)};
    const double eps = 0.05 + (i % 10) * 0.05;
    ASSERT_TRUE(IsFeasible(Fgsm(m, ex, 7, eps), ex.features, eps));
  }
}

TEST(FgsmTest, NonFiniteGradientIsAttackFailure) {
  // Logits overflow to +/-inf, so the softmax and its gradient are NaN.
  const ModelParams m = BinaryLinear({1e308, 1e308});
  const Example ex{{1.0, 1.0}, 0};
  try {
    Fgsm(m, ex, 42, 0.3);
    FAIL();
  } catch (const AttackFailedError& e) {
    EXPECT_EQ(e.example_index(), 42u);
  }
}

TEST(PgdTest, NoStepsNoInitReturnsClean) {
  const ModelParams m = RandomModel(Architecture::kMlp1, 4, 3, 5, 1);
  const Example ex{{0.1, 0.2, 0.3, 0.4}, 2};
  const auto out = Pgd(m, ex, 0, PgdConfig(0.3, 0.1, 0, 1, false), 9);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].adversarial_input, ex.features);
}

TEST(PgdTest, ReachesCornerOptimumOnBinaryLinearModels) {
  std::mt19937_64 gen(33);
  std::normal_distribution<double> normal(0.0, 2.0);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t d = 1 + trial % 12;
    Vector w(d);
    for (double& v : w) v = normal(gen);
    const Example ex{RandomInput(d, gen), static_cast<std::size_t>(trial % 2)};
    const auto out = Pgd(BinaryLinear(w), ex, 0, PgdConfig(0.3, 0.1, 40, 2), trial);
    const double oracle = testing::CornerOracleMaxLoss(w, 0.0, ex.features, ex.label, 0.3);
    for (const Candidate& c : out) {
      EXPECT_NEAR(testing::BinaryLoss(w, 0.0, c.adversarial_input, ex.label), oracle, 1e-6);
    }
  }
}

TEST(PgdTest, LossNonDecreasingOnLinearModels) {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 30; ++trial) {
    const ModelParams m = RandomModel(Architecture::kSoftmaxLinear, 6, 2, 0, trial);
    const Example ex{RandomInput(6, gen), static_cast<std::size_t>(trial % 2)};
    PgdTrace trace;
    Pgd(m, ex, 0, PgdConfig(0.3, 0.03, 25, 3), trial, &trace);
    ASSERT_EQ(trace.size(), 3u);
    for (const auto& losses : trace) {
      ASSERT_EQ(losses.size(), 26u);
      for (std::size_t s = 1; s < losses.size(); ++s) {
        ASSERT_GE(losses[s], losses[s - 1] - 1e-12) << "trial " << trial << " step " << s;
      }
    }
  }
}

TEST(PgdTest, RestartIndicesAndDeterminism) {
  const ModelParams m = RandomModel(Architecture::kMlp1, 4, 3, 5, 1);
  const Example ex{{0.1, 0.2, 0.3, 0.4}, 2};
  AttackConfig config = PgdConfig(0.3, 0.05, 10, 4);
  config.first_restart = 3;
  const auto a = Pgd(m, ex, 5, config, 77);
  const auto b = Pgd(m, ex, 5, config, 77);
  EXPECT_EQ(a, b);
  for (std::size_t r = 0; r < 4; ++r) {
    EXPECT_EQ(a[r].restart_index, 3 + r);
    EXPECT_EQ(a[r].example_index, 5u);
    EXPECT_TRUE(IsFeasible(a[r], ex.features, 0.3));
  }
  EXPECT_NE(a[0].adversarial_input, a[1].adversarial_input);
  EXPECT_NE(Pgd(m, ex, 5, config, 78), a);
}

TEST(PgdTest, NonFiniteGradientNamesStepAndRestart) {
  const ModelParams m = BinaryLinear({1e308, 1e308});
  const Example ex{{1.0, 1.0}, 0};
  try {
    Pgd(m, ex, 3, PgdConfig(0.3, 0.1, 5, 1, false), 0);
    FAIL();
  } catch (const AttackFailedError& e) {
    EXPECT_EQ(e.example_index(), 3u);
    const std::string what = e.what();
    EXPECT_NE(what.find("step 0"), std::string::npos);
    EXPECT_NE(what.find("restart 0"), std::string::npos);
  }
}

TEST(PgdTest, RejectsNonPgdConfig) {
  AttackConfig config = PgdConfig(0.3, 0.1, 5, 1);
  config.variant = AttackVariant::kFgsm;
  EXPECT_THROW(Pgd(BinaryLinear({1.0}), Example{{0.5}, 0}, 0, config, 0), Error);
}

TEST(UniformNoiseTest, TinyEpsilonStaysAtClean) {
  const Example ex{{0.3, 0.6}, 0};
  for (const Candidate& c : UniformNoise(ex, 0, 1e-12, 20, 4)) {
    EXPECT_LE(LinfDistance(c.adversarial_input, ex.features), 1e-12);
  }
}

TEST(UniformNoiseTest, SamplesFeasibleAndDeterministic) {
  std::mt19937_64 gen(9);
  for (int i = 0; i < 100; ++i) {
    const Example ex{RandomInput(4, gen), 0};
    const auto a = UniformNoise(ex, i, 0.3, 10, i);
    EXPECT_EQ(a, UniformNoise(ex, i, 0.3, 10, i));
    for (std::size_t s = 0; s < a.size(); ++s) {
      EXPECT_TRUE(IsFeasible(a[s], ex.features, 0.3));
      EXPECT_EQ(a[s].restart_index, s);
    }
  }
}

TEST(UniformNoiseTest, PerturbationMeanNearZeroForInteriorPoints) {
  const Example ex{{0.5, 0.45, 0.55}, 0};
  const auto samples = UniformNoise(ex, 0, 0.3, 10000, 12);
  for (std::size_t j = 0; j < 3; ++j) {
    double mean = 0.0;
    for (const Candidate& c : samples) {
      mean += (c.adversarial_input[j] - ex.features[j]) / 10000.0;
    }
    EXPECT_NEAR(mean, 0.0, 0.01);
  }
}

TEST(RunAttackTest, SeedsDependOnExampleAndStream) {
  const ModelParams m = RandomModel(Architecture::kMlp1, 3, 2, 4, 2);
  const Example ex{{0.4, 0.5, 0.6}, 1};
  AttackConfig config = PgdConfig(0.2, 0.05, 5, 2);
  const auto base = RunAttack(m, ex, 0, config, 1);
  EXPECT_EQ(base, RunAttack(m, ex, 0, config, 1));
  EXPECT_NE(base[0].adversarial_input, RunAttack(m, ex, 0, config, 2)[0].adversarial_input);
  config.seed_stream = 12345;
  EXPECT_NE(base[0].adversarial_input, RunAttack(m, ex, 0, config, 1)[0].adversarial_input);
}

TEST(RunAttackTest, EveryVariantEmitsFeasibleCandidates) {
  std::mt19937_64 gen(1);
  const ModelParams m = RandomModel(Architecture::kMlp1, 5, 3, 6, 4);
  std::vector<AttackConfig> configs(3);
  configs[0] = PgdConfig(0.25, 0.05, 20, 3);
  configs[1].attack_id = "fgsm";
  configs[1].variant = AttackVariant::kFgsm;
  configs[1].epsilon = 0.1;
  configs[2].attack_id = "noise";
  configs[2].variant = AttackVariant::kUniformNoise;
  configs[2].epsilon = 0.2;
  configs[2].num_samples = 15;
  for (int i = 0; i < 50; ++i) {
    const Example ex{RandomInput(5, gen), static_cast<std::size_t>(i % 3)};
    for (const AttackConfig& c : configs) {
      for (const Candidate& cand : RunAttack(m, ex, i, c, 3)) {
        ASSERT_TRUE(IsFeasible(cand, ex.features, c.epsilon)) << c.attack_id;
        ASSERT_EQ(cand.attack_id, c.attack_id);
      }
    }
  }
}

TEST(AttackConfigTest, ValidationRejectsBadFields) {
  AttackConfig c = PgdConfig(0.3, 0.1, 5, 1);
  c.epsilon = 0.0;
  EXPECT_THROW(c.Validate(), Error);
  c = PgdConfig(0.3, 0.0, 5, 1);
  EXPECT_THROW(c.Validate(), Error);
  c = PgdConfig(0.3, 0.1, 5, 0);
  EXPECT_THROW(c.Validate(), Error);
  c = PgdConfig(0.3, 0.1, 5, 1);
  c.attack_id = "none";
  EXPECT_THROW(c.Validate(), Error);
}

TEST(CandidatesCsvTest, HeaderAndRows) {
  const std::vector<Candidate> cands = {{2, {0.5, 0.25}, "pgd", 1}};
  std::ostringstream out;
  WriteCandidatesCsv(out, cands);
  EXPECT_EQ(out.str(), "example_index,attack_id,restart_index,x0,x1\n2,pgd,1,0.5,0.25\n");
}

}  // namespace
}  // namespace bundling
