#include <benchmark/benchmark.h>

#include "bundling/attacks.h"
#include "bundling/bundler.h"
#include "bundling/data.h"
#include "bundling/model.h"

namespace {

using namespace bundling;

struct Setup {
  Dataset train;
  Dataset eval;
  ModelParams model;
};

const Setup& Shared() {
  static const Setup setup = [] {
    const Dataset all = SynthDataset(600, 20, 3, 7, {8.0});
    TrainConfig config;
    config.epochs = 5;
    Setup s{all.Slice(0, 500), all.Slice(500, 600), {}};
    s.model = Train(s.train, Architecture::kMlp1, config);
    return s;
  }();
  return setup;
}

void BM_Predict(benchmark::State& state) {
  const Setup& s = Shared();
  for (auto _ : state) {
    benchmark::DoNotOptimize(Predict(s.model, s.eval[0].features));
  }
}
BENCHMARK(BM_Predict);

void BM_InputGradient(benchmark::State& state) {
  const Setup& s = Shared();
  for (auto _ : state) {
    benchmark::DoNotOptimize(InputGradient(s.model, s.eval[0].features, s.eval[0].label));
  }
}
BENCHMARK(BM_InputGradient);

void BM_Pgd(benchmark::State& state) {
  const Setup& s = Shared();
  AttackConfig config;
  config.attack_id = "pgd";
  config.num_steps = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(Pgd(s.model, s.eval[0], 0, config, 1));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Pgd)->Arg(40)->Arg(1000);

void BM_Bundle(benchmark::State& state) {
  const Setup& s = Shared();
  AttackConfig pgd;
  pgd.attack_id = "pgd";
  pgd.num_restarts = 2;
  AttackConfig noise;
  noise.attack_id = "noise";
  noise.variant = AttackVariant::kUniformNoise;
  BundleOptions options;
  options.workers = static_cast<std::size_t>(state.range(0));
  const std::vector<AttackConfig> attacks = {pgd, noise};
  for (auto _ : state) {
    benchmark::DoNotOptimize(Bundle(s.model, s.eval, attacks, Criterion::Misclassify(),
                                    {}, 3, options));
  }
  state.SetItemsProcessed(state.iterations() * s.eval.size());
}
BENCHMARK(BM_Bundle)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
