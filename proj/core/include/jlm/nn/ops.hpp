#pragma once

#include <cstdint>
#include <vector>

#include "jlm/nn/tensor.hpp"

namespace jlm::nn {

// Elementwise. For add/sub/mul, y may have the same shape as x or a
// trailing suffix of it (broadcast over the leading axes of x).
Tensor add(const Tensor& x, const Tensor& y);
Tensor sub(const Tensor& x, const Tensor& y);
Tensor mul(const Tensor& x, const Tensor& y);
Tensor scale(const Tensor& x, double c);
Tensor neg(const Tensor& x);
Tensor abs(const Tensor& x);
Tensor relu(const Tensor& x);
Tensor gelu(const Tensor& x);  // exact erf form

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

// y = x W^T + b over the last axis. W is (out, in); b (out) may be undefined.
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);

// (G, n, k) x (G, k, m) -> (G, n, m); with transpose_b, b is (G, m, k).
Tensor bmm(const Tensor& a, const Tensor& b, bool transpose_b = false);

Tensor reshape(const Tensor& x, Shape shape);
Tensor permute(const Tensor& x, const std::vector<std::size_t>& axes);
Tensor slice(const Tensor& x, std::size_t axis, std::size_t begin, std::size_t end);
Tensor index_select(const Tensor& x, std::size_t axis, const std::vector<std::size_t>& indices);
Tensor concat(const std::vector<Tensor>& xs, std::size_t axis);
// Repeats x (whose shape is a suffix of `shape`) over the leading axes.
Tensor broadcast_to(const Tensor& x, Shape shape);
// out[i] = mask[i] ? b[i] : a[i]; all three share one shape.
Tensor where(const std::vector<std::uint8_t>& mask, const Tensor& a, const Tensor& b);

Tensor softmax(const Tensor& x, std::size_t axis);

// Normalizes over the last axis.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-5);
// Splits the last axis into `groups` contiguous groups and normalizes each.
Tensor group_norm(const Tensor& x, std::size_t groups, const Tensor& gamma, const Tensor& beta,
                  double eps = 1e-5);

// 32 when channels divide by 32, otherwise gcd(channels, 32); halved until
// each group holds at least 4 channels.
std::size_t default_group_count(std::size_t channels);

// (..., 6) -> (..., 3, 3) through Gram-Schmidt.
Tensor sixd_to_matrix(const Tensor& x);

}  // namespace jlm::nn
