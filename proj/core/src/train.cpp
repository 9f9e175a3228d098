#include "jlm/train.hpp"

#include <cmath>
#include <fstream>

#include "jlm/checkpoint.hpp"
#include "jlm/errors.hpp"

namespace jlm {
namespace {

// Decorrelates the per-purpose generators derived from one user seed.
std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

enum class Stream : std::uint64_t { kModel = 1, kData = 2, kMask = 3 };

std::uint64_t derive_seed(std::uint64_t seed, Stream s) {
  return splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(s)));
}

bool grads_finite(const nn::ParamStore& params) {
  for (const auto& [name, t] : params.entries()) {
    for (double g : t.grad()) {
      if (!std::isfinite(g)) return false;
    }
  }
  return true;
}

checkpoint::Manifest manifest_for(const Trainer& tr) {
  checkpoint::Manifest m;
  m.model = tr.config().model;
  m.train = tr.config();
  m.iteration = tr.iteration();
  m.seed = derive_seed(tr.config().seed, Stream::kModel);
  m.skeleton = tr.model().skeleton();
  return m;
}

}  // namespace

Trainer::Trainer(const TrainConfig& cfg, std::vector<MotionSequence> dataset, SkeletonTemplate tmpl)
    : cfg_((cfg.validate(), cfg)),
      model_(cfg.model, tmpl, derive_seed(cfg.seed, Stream::kModel)),
      sampler_(std::move(dataset), tmpl, cfg.model.t, derive_seed(cfg.seed, Stream::kData)),
      mask_rng_(derive_seed(cfg.seed, Stream::kMask)) {}

StepRecord Trainer::step() {
  StepRecord rec;
  rec.step = iteration_;
  rec.lr = cfg_.lr_at(iteration_);

  const std::vector<dataio::Window> windows = sampler_.next_batch(cfg_.batch);
  std::vector<const TrackingSignals*> signals;
  signals.reserve(windows.size());
  for (const auto& w : windows) signals.push_back(&w.signals);
  const nn::Tensor x = signals_tensor(signals);
  const WindowTargets targets = losses::make_targets(windows, model_.skeleton());

  std::optional<TokenMask> mask;
  if (cfg_.masking && cfg_.model.mask_count > 0) mask = model_.draw_token_mask(windows.size(), mask_rng_);
  LossTerms terms;
  try {
    const ModelOutput out = model_.full_forward(x, mask ? &*mask : nullptr);
    terms = losses::compute(out, targets, model_.skeleton(), cfg_.weights, cfg_.toggles);
  } catch (const DegenerateInput& e) {
    // Overflowing activations reach the 6D decoding as inf or nan.
    throw NonFiniteLoss("forward pass diverged at step " + std::to_string(iteration_) + " (" + e.what() + ")");
  }
  rec.loss = terms.report();
  if (!rec.loss.all_finite()) {
    throw NonFiniteLoss("loss is not finite at step " + std::to_string(iteration_));
  }

  nn::backward(terms.total);
  if (!grads_finite(model_.params())) {
    model_.params().zero_grad();
    throw NonFiniteLoss("gradient is not finite at step " + std::to_string(iteration_));
  }
  nn::adam_step(model_.params(), adam_, rec.lr);
  ++iteration_;
  return rec;
}

TrainResult train(Trainer& trainer, const TrainOutputs& outputs) {
  const TrainConfig& cfg = trainer.config();
  TrainResult result;
  std::ofstream log;
  const bool persist = !outputs.out_dir.empty();
  if (persist) {
    std::filesystem::create_directories(outputs.out_dir);
    log.open(outputs.out_dir / "train_log.jsonl", std::ios::trunc);
    if (!log) throw DataError("cannot write training log in " + outputs.out_dir.string());
  }

  while (trainer.iteration() < cfg.iterations) {
    StepRecord rec;
    try {
      rec = trainer.step();
    } catch (const NonFiniteLoss&) {
      if (persist) {
        checkpoint::save(trainer.model(), manifest_for(trainer), outputs.out_dir / "last_good.jlmc");
      }
      throw;
    }
    result.history.push_back(rec);
    if (outputs.on_step) outputs.on_step(rec);
    if (!persist) continue;

    const bool last = trainer.iteration() == cfg.iterations;
    if (last || (cfg.log_every && rec.step % cfg.log_every == 0)) {
      log << step_record_to_json(rec) << '\n';
    }
    if (cfg.checkpoint_every && trainer.iteration() % cfg.checkpoint_every == 0 && !last) {
      checkpoint::save(trainer.model(), manifest_for(trainer),
                       outputs.out_dir / ("checkpoint_" + std::to_string(trainer.iteration()) + ".jlmc"));
    }
  }
  if (persist) {
    log.flush();
    result.checkpoint = outputs.out_dir / "checkpoint.jlmc";
    checkpoint::save(trainer.model(), manifest_for(trainer), result.checkpoint);
  }
  return result;
}

nn::GradCheckReport model_grad_check(const ModelConfig& cfg, const SkeletonTemplate& tmpl, std::uint64_t seed,
                                     const nn::GradCheckOptions& opt, std::size_t batch) {
  // Walking gives both moving and grounded feet inside short windows.
  const double seconds = static_cast<double>(cfg.t + 30) / 60.0;
  std::vector<MotionSequence> data{dataio::synth_generate(SynthKind::kWalkCycle, seconds, 60.0, seed, tmpl)};
  dataio::WindowSampler sampler(std::move(data), tmpl, cfg.t, derive_seed(seed, Stream::kData));
  const std::vector<dataio::Window> windows = sampler.next_batch(batch);
  std::vector<const TrackingSignals*> signals;
  for (const auto& w : windows) signals.push_back(&w.signals);
  const nn::Tensor x = signals_tensor(signals);
  const WindowTargets targets = losses::make_targets(windows, tmpl);

  JLMModel model(cfg, tmpl, derive_seed(seed, Stream::kModel));
  std::mt19937_64 mask_rng(derive_seed(seed, Stream::kMask));
  const TokenMask mask = model.draw_token_mask(batch, mask_rng);
  auto fn = [&] {
    return losses::compute(model.full_forward(x, &mask), targets, tmpl).total;
  };
  return nn::grad_check(fn, model.params(), opt);
}

}  // namespace jlm
