#pragma once

// Differentiable counterparts of the skeleton operations, used inside the
// training graph.

#include "jlm/nn/tensor.hpp"
#include "jlm/skeleton.hpp"

namespace jlm::kinematics {

struct FkResult {
  nn::Tensor global_rotations;  // (N, J, 3, 3)
  nn::Tensor positions;         // (N, J, 3)
};

// local_rotations (N, J, 3, 3); root_translation (N, 3) or undefined for zero.
FkResult forward_kinematics(const nn::Tensor& local_rotations, const nn::Tensor& root_translation,
                            const SkeletonTemplate& tmpl);

// positions (..., J, 3) minus the head joint of the same frame.
nn::Tensor to_head_relative(const nn::Tensor& positions, int head_index = joint::kHead);

// positions (..., J, 3), observed_head (..., 3).
nn::Tensor head_align(const nn::Tensor& positions, const nn::Tensor& observed_head,
                      int head_index = joint::kHead);

}  // namespace jlm::kinematics
