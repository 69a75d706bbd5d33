#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "itemgrad/backprop.hpp"
#include "itemgrad/gradlog.hpp"
#include "itemgrad/rnn.hpp"
#include "itemgrad/trainer.hpp"

namespace {

using namespace itemgrad;

// Default-sized batch (n=25, H=100, C=95) with small random weights.
struct Fixture {
  ModelParams params = init_params(100, 95, 0.01, 0);
  Vector h0 = Vector::Zero(100);
  std::vector<SymbolIndex> inputs;
  std::vector<SymbolIndex> targets;

  Fixture() {
    std::mt19937_64 rng(1);
    for (int t = 0; t < 25; ++t) {
      inputs.push_back(rng() % 95);
      targets.push_back(rng() % 95);
    }
  }
  ForwardTrace trace() const { return forward_batch(params, h0, inputs, targets); }
};

void BM_Forward(benchmark::State& state) {
  const Fixture f;
  for (auto _ : state) benchmark::DoNotOptimize(f.trace());
}
BENCHMARK(BM_Forward);

void BM_BpttStandard(benchmark::State& state) {
  const Fixture f;
  const ForwardTrace tr = f.trace();
  for (auto _ : state) benchmark::DoNotOptimize(bptt_standard(tr, f.params));
}
BENCHMARK(BM_BpttStandard);

// Cost grows with the horizon: each origin walks back min(k, t) steps.
void BM_BpttItemized(benchmark::State& state) {
  const Fixture f;
  const ForwardTrace tr = f.trace();
  const int horizon = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(bptt_itemized(tr, f.params, horizon));
}
BENCHMARK(BM_BpttItemized)->Arg(0)->Arg(5)->Arg(24);

void BM_SerializeLog(benchmark::State& state) {
  TrainingConfig cfg;
  cfg.max_batches = 1000;
  std::u32string corpus;
  std::mt19937_64 rng(2);
  for (int i = 0; i < 30000; ++i) corpus.push_back(U'a' + static_cast<char32_t>(rng() % 26));
  const GradientLog log = train(corpus, cfg).log;
  for (auto _ : state) benchmark::DoNotOptimize(serialize(log));
}
BENCHMARK(BM_SerializeLog)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
