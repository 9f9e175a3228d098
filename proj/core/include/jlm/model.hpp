#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <vector>

#include "jlm/dataio.hpp"
#include "jlm/nn/optim.hpp"
#include "jlm/nn/tensor.hpp"
#include "jlm/skeleton.hpp"

namespace jlm {

struct ModelConfig {
  std::size_t t = 41;      // window length
  std::size_t d1 = 1024;   // input feature width
  std::size_t d2 = 512;    // joint token width
  std::size_t n = 6;       // STB/TTB loops
  std::size_t heads = 4;
  std::size_t mask_count = 2;
  std::size_t mlp_ratio = 4;

  static ModelConfig paper() { return {}; }
  static ModelConfig desk() { return {11, 64, 32, 2, 2, 2, 4}; }
  static ModelConfig tiny() { return {5, 16, 8, 1, 2, 2, 4}; }

  // Throws ShapeMismatch on inconsistent sizes.
  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

namespace tokens {
inline constexpr std::size_t kJointTokens = 2 * kNumJoints;           // 44
inline constexpr std::size_t kSpatialTokens = kJointTokens + 1;        // 45, with the EIF token
inline constexpr std::size_t kPoseWidth = kNumJoints * 6;              // 132
// Head and hand rotation tokens (15, 20, 21) and position tokens (+22).
inline constexpr std::array<std::size_t, 6> kProtected = {15, 20, 21, 37, 42, 43};
inline constexpr std::size_t kMaskable = kJointTokens - kProtected.size();  // 38
}  // namespace tokens

// Masked token indices per batch sample; each applies to every frame.
struct TokenMask {
  std::vector<std::vector<std::size_t>> per_sample;
};

struct Stage1Output {
  nn::Tensor h_embed;     // (B, t, d1)
  nn::Tensor theta_init;  // (B, t, 22, 6)
};

struct JointTokens {
  nn::Tensor h_init;  // (B, t, 44, d2); rotation tokens 0..21, position tokens 22..43
  nn::Tensor eif;     // (B, t, d2)
};

struct ModelOutput {
  nn::Tensor h_embed;
  nn::Tensor theta_init;  // (B, t, 22, 6)
  nn::Tensor theta;       // (B, t, 22, 6)
};

// The two-stage joint-level network. Forward passes only read parameters,
// so a frozen model may be shared across threads.
class JLMModel {
 public:
  JLMModel(const ModelConfig& config, SkeletonTemplate skeleton, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  const SkeletonTemplate& skeleton() const { return skeleton_; }
  nn::ParamStore& params() { return params_; }
  const nn::ParamStore& params() const { return params_; }

  Stage1Output stage1_forward(const nn::Tensor& x) const;
  JointTokens assemble_tokens(const nn::Tensor& theta_init, const nn::Tensor& x,
                              const nn::Tensor& h_embed) const;

  TokenMask draw_token_mask(std::size_t batch, std::mt19937_64& rng) const;
  nn::Tensor apply_token_mask(const nn::Tensor& h_init, const TokenMask& mask) const;

  // h (G, 44, d2), f (G, d2) -> (G, 44, d2)
  nn::Tensor stb_forward(const nn::Tensor& h, const nn::Tensor& f, std::size_t block) const;
  // h (G, t, d2) -> (G, t, d2)
  nn::Tensor ttb_forward(const nn::Tensor& h, std::size_t block) const;
  nn::Tensor stacked_forward(const nn::Tensor& h_init, const nn::Tensor& eif) const;
  nn::Tensor regress_smpl(const nn::Tensor& h_st) const;

  // x (B, t, 54). Without a mask this is the deterministic inference path.
  ModelOutput full_forward(const nn::Tensor& x, const TokenMask* mask = nullptr) const;

 private:
  nn::Tensor transformer_layer(const nn::Tensor& x, const std::string& prefix) const;
  const nn::Tensor& p(const std::string& name) const { return params_.at(name); }

  ModelConfig config_;
  SkeletonTemplate skeleton_;
  nn::ParamStore params_;
  std::size_t head_groups_;
};

// Stacks windows of tracking signals into a (B, t, 54) constant tensor.
nn::Tensor signals_tensor(const std::vector<const TrackingSignals*>& batch);

}  // namespace jlm
