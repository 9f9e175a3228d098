#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "jlm/dataio.hpp"
#include "jlm/losses.hpp"
#include "jlm/model.hpp"
#include "jlm/nn/gradcheck.hpp"
#include "jlm/nn/optim.hpp"

namespace jlm {

struct TrainConfig {
  ModelConfig model = ModelConfig::desk();
  std::size_t batch = 64;
  std::size_t iterations = 5000;
  double lr_start = 1e-4;
  double lr_end = 1e-5;
  double lr_drop_fraction = 0.6;
  std::uint64_t seed = 0;
  LossWeights weights;
  LossToggles toggles;
  bool masking = true;
  std::size_t log_every = 10;
  std::size_t checkpoint_every = 0;  // 0: only the final checkpoint

  // Throws SchemaError.
  void validate() const;
  // lr_start before the drop boundary, lr_end from it on.
  double lr_at(std::size_t step) const;
  bool operator==(const TrainConfig&) const = default;
};

// Preset names: "tiny", "desk", "paper".
ModelConfig model_preset(const std::string& name);

std::string model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const std::string& text);
std::string train_config_to_json(const TrainConfig& cfg);
// Accepts an optional "preset" key whose model sizes are then overridden
// by an explicit "model" object. Throws SchemaError.
TrainConfig train_config_from_json(const std::string& text);
TrainConfig load_train_config(const std::filesystem::path& path);

struct StepRecord {
  std::size_t step = 0;
  double lr = 0;
  LossReport loss;
};

std::string step_record_to_json(const StepRecord& r);  // one line, no newline

// Single-writer training loop. The data sampler, mask draws and model
// initialization use separate generators derived from cfg.seed.
class Trainer {
 public:
  Trainer(const TrainConfig& cfg, std::vector<MotionSequence> dataset, SkeletonTemplate tmpl);

  const TrainConfig& config() const { return cfg_; }
  const JLMModel& model() const { return model_; }
  JLMModel& model() { return model_; }
  std::size_t iteration() const { return iteration_; }

  // One optimization step. Throws NonFiniteLoss without touching the
  // parameters when the loss or a gradient is not finite.
  StepRecord step();

 private:
  TrainConfig cfg_;
  JLMModel model_;
  dataio::WindowSampler sampler_;
  std::mt19937_64 mask_rng_;
  nn::AdamState adam_;
  std::size_t iteration_ = 0;
};

struct TrainOutputs {
  std::filesystem::path out_dir;  // empty: keep everything in memory
  std::function<void(const StepRecord&)> on_step;
};

struct TrainResult {
  std::vector<StepRecord> history;
  std::filesystem::path checkpoint;
};

// Runs cfg.iterations steps. Writes train_log.jsonl, periodic
// checkpoint_<step>.jlmc and the final checkpoint.jlmc under out_dir. On a
// non-finite loss saves last_good.jlmc and rethrows.
TrainResult train(Trainer& trainer, const TrainOutputs& outputs = {});

// Finite-difference check of the total loss (every term on) over all
// parameters of a freshly initialized model, on a small synthetic batch
// with a fixed token mask.
nn::GradCheckReport model_grad_check(const ModelConfig& cfg, const SkeletonTemplate& tmpl, std::uint64_t seed,
                                     const nn::GradCheckOptions& opt = {}, std::size_t batch = 2);

}  // namespace jlm
