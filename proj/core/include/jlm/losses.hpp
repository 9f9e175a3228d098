#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "jlm/dataio.hpp"
#include "jlm/model.hpp"
#include "jlm/nn/tensor.hpp"
#include "jlm/skeleton.hpp"

namespace jlm {

struct LossWeights {
  double alpha = 0.5;     // foot height, inside the physical term
  double beta = 0.02;     // root orientation
  double gamma = 2.0;     // joint rotations
  double delta = 5.0;     // local positions
  double epsilon = 5.0;   // hand alignment
  double zeta = 50.0;     // motion (velocities + foot contact)

  // Throws SchemaError on negative or non-finite weights.
  void validate() const;
  bool operator==(const LossWeights&) const = default;
};

// Ablation switches; a disabled group is not computed and reports 0.
struct LossToggles {
  bool hand = true;
  bool vel_short = true;  // L_v(1)
  bool vel_long = true;   // L_v(3), L_v(5)
  bool foot_contact = true;
  bool penetration = true;
  bool foot_height = true;
  bool operator==(const LossToggles&) const = default;
};

struct LossReport {
  double l_first = 0, l_ori = 0, l_rot = 0, l_pos = 0, l_hand = 0;
  double l_v1 = 0, l_v3 = 0, l_v5 = 0, l_fc = 0, l_p = 0, l_fh = 0;
  double total = 0;

  std::vector<std::pair<std::string, double>> named() const;
  bool all_finite() const;
};

struct LossTerms {
  nn::Tensor l_first, l_ori, l_rot, l_pos, l_hand;
  nn::Tensor l_v1, l_v3, l_v5, l_fc, l_p, l_fh;
  nn::Tensor total;

  LossReport report() const;
};

// Ground truth for a batch of windows. Positions are (B, t, 22, 3).
struct WindowTargets {
  nn::Tensor theta;           // (B, t, 22, 6)
  nn::Tensor local_positions; // FK with zero root translation
  nn::Tensor global_positions;
  nn::Tensor observed_head;   // (B, t, 3)
  std::vector<std::uint8_t> contact;  // (B, t, 4)
};

namespace losses {

struct BasicLosses {
  nn::Tensor l_first, l_ori, l_rot, l_pos;
};

// theta_* (B, t, 22, 6); positions (B, t, 22, 3).
BasicLosses basic_losses(const nn::Tensor& theta_init, const nn::Tensor& theta,
                         const nn::Tensor& local_positions, const nn::Tensor& theta_gt,
                         const nn::Tensor& local_positions_gt, const SkeletonTemplate& tmpl);

nn::Tensor hand_alignment_loss(const nn::Tensor& global_positions, const nn::Tensor& global_positions_gt);
// Throws WindowTooShort when t <= lag.
nn::Tensor velocity_loss(const nn::Tensor& global_positions, const nn::Tensor& global_positions_gt,
                         std::size_t lag);
// contact is (B, t, 4); frame i weights the step i -> i+1.
nn::Tensor foot_contact_loss(const nn::Tensor& global_positions, const std::vector<std::uint8_t>& contact);
nn::Tensor penetration_loss(const nn::Tensor& global_positions);
nn::Tensor foot_height_loss(const nn::Tensor& global_positions, const std::vector<std::uint8_t>& contact);

// Fills `total` from the other terms. Undefined terms count as zero.
void total_loss(LossTerms& terms, const LossWeights& w);

// (N, 22, 6) -> FK positions (N, 22, 3) with zero root translation.
nn::Tensor local_positions(const nn::Tensor& theta, const SkeletonTemplate& tmpl);

WindowTargets make_targets(const std::vector<dataio::Window>& windows, const SkeletonTemplate& tmpl);

// Every term for one forward pass, with head alignment inside the graph.
LossTerms compute(const ModelOutput& out, const WindowTargets& targets, const SkeletonTemplate& tmpl,
                  const LossWeights& w = {}, const LossToggles& toggles = {});

}  // namespace losses
}  // namespace jlm
