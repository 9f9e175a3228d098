#include <benchmark/benchmark.h>

#include <random>

#include "jlm/infer.hpp"
#include "jlm/losses.hpp"
#include "jlm/model.hpp"
#include "jlm/nn/attention.hpp"
#include "jlm/nn/ops.hpp"

namespace {

const jlm::SkeletonTemplate& skeleton() {
  static const jlm::SkeletonTemplate tmpl = jlm::SkeletonTemplate::load(JLM_BENCH_SKELETON);
  return tmpl;
}

std::vector<double> noise(std::size_t n, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, scale);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

void BM_ForwardKinematics(benchmark::State& state) {
  const std::size_t frames = static_cast<std::size_t>(state.range(0));
  const auto seq = jlm::dataio::synth_generate(jlm::SynthKind::kWalkCycle, static_cast<double>(frames) / 60.0, 60.0, 1,
                                               skeleton());
  const jlm::LocalPose pose = seq.local_pose();
  const auto roots = seq.root_translations();
  for (auto _ : state) benchmark::DoNotOptimize(jlm::skeleton::forward_kinematics(pose, skeleton(), roots));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(frames));
}
BENCHMARK(BM_ForwardKinematics)->Arg(60)->Arg(600);

void BM_Attention(benchmark::State& state) {
  const std::size_t tokens = static_cast<std::size_t>(state.range(0)), d = 64, g = 16;
  using jlm::nn::Tensor;
  const Tensor wq = Tensor::constant({d, d}, noise(d * d, 10, 0.1)), wk = Tensor::constant({d, d}, noise(d * d, 11, 0.1));
  const Tensor wv = Tensor::constant({d, d}, noise(d * d, 12, 0.1)), wo = Tensor::constant({d, d}, noise(d * d, 13, 0.1));
  const Tensor x = Tensor::constant({g, tokens, d}, noise(g * tokens * d, 3));
  for (auto _ : state) benchmark::DoNotOptimize(jlm::nn::multi_head_attention(x, wq, wk, wv, wo, 4));
}
BENCHMARK(BM_Attention)->Arg(11)->Arg(45);

void BM_FullForward(benchmark::State& state, jlm::ModelConfig cfg) {
  const jlm::JLMModel model(cfg, skeleton(), 4);
  const std::size_t b = 8;
  const auto x = jlm::nn::Tensor::constant({b, cfg.t, 54}, noise(b * cfg.t * 54, 5, 0.3));
  for (auto _ : state) benchmark::DoNotOptimize(model.full_forward(x));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(b));
}
BENCHMARK_CAPTURE(BM_FullForward, tiny, jlm::ModelConfig::tiny());
BENCHMARK_CAPTURE(BM_FullForward, desk, jlm::ModelConfig::desk());

void BM_TrainStep(benchmark::State& state) {
  const jlm::ModelConfig cfg = jlm::ModelConfig::tiny();
  jlm::JLMModel model(cfg, skeleton(), 6);
  const auto seq = jlm::dataio::synth_generate(jlm::SynthKind::kSquat, 2.0, 60.0, 1, skeleton());
  jlm::dataio::WindowSampler sampler({seq}, skeleton(), cfg.t, 7);
  const auto windows = sampler.next_batch(64);
  std::vector<const jlm::TrackingSignals*> sig;
  for (const auto& w : windows) sig.push_back(&w.signals);
  const auto x = jlm::signals_tensor(sig);
  const auto targets = jlm::losses::make_targets(windows, skeleton());
  for (auto _ : state) {
    model.params().zero_grad();
    const auto terms = jlm::losses::compute(model.full_forward(x), targets, skeleton());
    jlm::nn::backward(terms.total);
  }
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);

void BM_StreamPush(benchmark::State& state) {
  const jlm::JLMModel model(jlm::ModelConfig::desk(), skeleton(), 8);
  jlm::InferenceStream stream(model);
  const auto row = noise(54, 9, 0.3);
  for (auto _ : state) benchmark::DoNotOptimize(stream.push(row));
}
BENCHMARK(BM_StreamPush);

}  // namespace
BENCHMARK_MAIN();
