#pragma once

#include "jlm/nn/tensor.hpp"

namespace jlm::nn {

// Scaled dot-product self-attention over tokens (G, n, d) or (n, d).
// Projections are (d, d) without bias; scale is 1/sqrt(d / heads).
Tensor multi_head_attention(const Tensor& tokens, const Tensor& wq, const Tensor& wk,
                            const Tensor& wv, const Tensor& wo, std::size_t heads);

}  // namespace jlm::nn
