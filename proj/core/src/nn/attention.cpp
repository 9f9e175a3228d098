#include "jlm/nn/attention.hpp"

#include <cmath>

#include "jlm/errors.hpp"
#include "jlm/nn/ops.hpp"

namespace jlm::nn {

Tensor multi_head_attention(const Tensor& tokens, const Tensor& wq, const Tensor& wk,
                            const Tensor& wv, const Tensor& wo, std::size_t heads) {
  const bool unbatched = tokens.rank() == 2;
  if (tokens.rank() != 2 && tokens.rank() != 3) {
    throw ShapeMismatch("attention expects (G, n, d) or (n, d), got " + to_string(tokens.shape()));
  }
  const Tensor x = unbatched ? reshape(tokens, {1, tokens.dim(0), tokens.dim(1)}) : tokens;
  const std::size_t g = x.dim(0), n = x.dim(1), d = x.dim(2);
  if (heads == 0 || d % heads != 0) {
    throw ShapeMismatch("attention: model width " + std::to_string(d) + " not divisible by " +
                        std::to_string(heads) + " heads");
  }
  for (const Tensor* w : {&wq, &wk, &wv, &wo}) {
    if (w->shape() != Shape{d, d}) throw ShapeMismatch("attention projection " + to_string(w->shape()));
  }
  const std::size_t dh = d / heads;

  auto split_heads = [&](const Tensor& t) {
    return reshape(permute(reshape(t, {g, n, heads, dh}), {0, 2, 1, 3}), {g * heads, n, dh});
  };
  const Tensor q = split_heads(linear(x, wq, Tensor()));
  const Tensor k = split_heads(linear(x, wk, Tensor()));
  const Tensor v = split_heads(linear(x, wv, Tensor()));

  const Tensor scores = scale(bmm(q, k, true), 1.0 / std::sqrt(static_cast<double>(dh)));
  const Tensor attn = softmax(scores, 2);
  const Tensor ctx = bmm(attn, v);
  const Tensor merged = reshape(permute(reshape(ctx, {g, heads, n, dh}), {0, 2, 1, 3}), {g, n, d});
  const Tensor out = linear(merged, wo, Tensor());
  return unbatched ? reshape(out, {n, d}) : out;
}

}  // namespace jlm::nn
