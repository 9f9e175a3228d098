#include "jlm/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <Eigen/Core>

#include "jlm/errors.hpp"

namespace jlm::nn {
namespace {

using Mat = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using CMat = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

void mismatch(const char* op, const Shape& a, const Shape& b) {
  throw ShapeMismatch(std::string(op) + ": " + to_string(a) + " vs " + to_string(b));
}

// True if `suffix` equals the trailing axes of `full`.
bool is_suffix(const Shape& full, const Shape& suffix) {
  if (suffix.size() > full.size()) return false;
  return std::equal(suffix.begin(), suffix.end(), full.end() - static_cast<long>(suffix.size()));
}

struct AxisSplit {
  std::size_t outer = 1, n = 1, inner = 1;
};

AxisSplit split_at(const Shape& s, std::size_t axis) {
  AxisSplit a;
  for (std::size_t i = 0; i < axis; ++i) a.outer *= s[i];
  a.n = s[axis];
  for (std::size_t i = axis + 1; i < s.size(); ++i) a.inner *= s[i];
  return a;
}

void check_axis(const char* op, const Tensor& x, std::size_t axis) {
  if (axis >= x.rank()) {
    throw ShapeMismatch(std::string(op) + ": axis " + std::to_string(axis) +
                        " out of range for shape " + to_string(x.shape()));
  }
}

Node& in(Node& self, std::size_t i) { return *self.inputs[i]; }

// Binary elementwise with suffix broadcasting of y. dfx/dfy return local
// partials given (x, y).
template <class F, class DX, class DY>
Tensor binary(const char* name, const Tensor& x, const Tensor& y, F f, DX dfx, DY dfy) {
  if (!is_suffix(x.shape(), y.shape())) mismatch(name, x.shape(), y.shape());
  const std::size_t n = x.numel(), m = y.numel();
  std::vector<double> out(n);
  const auto xd = x.data();
  const auto yd = y.data();
  for (std::size_t i = 0; i < n; ++i) out[i] = f(xd[i], yd[i % m]);
  return make_result(x.shape(), std::move(out), {x, y}, [n, m, dfx, dfy](Node& self) {
    Node& a = in(self, 0);
    Node& b = in(self, 1);
    if (a.requires_grad) {
      auto& g = a.ensure_grad();
      for (std::size_t i = 0; i < n; ++i) g[i] += self.grad[i] * dfx(a.value[i], b.value[i % m]);
    }
    if (b.requires_grad) {
      auto& g = b.ensure_grad();
      for (std::size_t i = 0; i < n; ++i) g[i % m] += self.grad[i] * dfy(a.value[i], b.value[i % m]);
    }
  });
}

template <class F, class DF>
Tensor pointwise(const Tensor& x, F f, DF df) {
  std::vector<double> out(x.numel());
  const auto xd = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(xd[i]);
  return make_result(x.shape(), std::move(out), {x}, [df](Node& self) {
    Node& a = in(self, 0);
    auto& g = a.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * df(a.value[i]);
  });
}

}  // namespace

Tensor add(const Tensor& x, const Tensor& y) {
  return binary(
      "add", x, y, [](double a, double b) { return a + b; }, [](double, double) { return 1.0; },
      [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& x, const Tensor& y) {
  return binary(
      "sub", x, y, [](double a, double b) { return a - b; }, [](double, double) { return 1.0; },
      [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& x, const Tensor& y) {
  return binary(
      "mul", x, y, [](double a, double b) { return a * b; }, [](double, double b) { return b; },
      [](double a, double) { return a; });
}

Tensor scale(const Tensor& x, double c) {
  return pointwise(x, [c](double v) { return c * v; }, [c](double) { return c; });
}

Tensor neg(const Tensor& x) { return scale(x, -1.0); }

Tensor abs(const Tensor& x) {
  // Subgradient 0 at the kink.
  return pointwise(
      x, [](double v) { return std::abs(v); },
      [](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

Tensor relu(const Tensor& x) {
  return pointwise(
      x, [](double v) { return v > 0.0 ? v : 0.0; }, [](double v) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor gelu(const Tensor& x) {
  constexpr double inv_sqrt2 = 0.70710678118654752440;
  const double inv_sqrt2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  return pointwise(
      x, [=](double v) { return 0.5 * v * (1.0 + std::erf(v * inv_sqrt2)); },
      [=](double v) {
        const double cdf = 0.5 * (1.0 + std::erf(v * inv_sqrt2));
        return cdf + v * inv_sqrt2pi * std::exp(-0.5 * v * v);
      });
}

namespace {

// Neumaier compensated sum; keeps loss reductions within an ulp or two so
// finite-difference checks resolve small gradients.
double compensated_sum(std::span<const double> xs) {
  double s = 0.0, c = 0.0;
  for (double v : xs) {
    const double t = s + v;
    c += std::abs(s) >= std::abs(v) ? (s - t) + v : (v - t) + s;
    s = t;
  }
  return s + c;
}

}  // namespace

Tensor sum(const Tensor& x) {
  const double s = compensated_sum(x.data());
  return make_result({}, {s}, {x}, [](Node& self) {
    Node& a = in(self, 0);
    auto& g = a.ensure_grad();
    for (auto& v : g) v += self.grad[0];
  });
}

Tensor mean(const Tensor& x) {
  if (x.numel() == 0) throw ShapeMismatch("mean of an empty tensor");
  return scale(sum(x), 1.0 / static_cast<double>(x.numel()));
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  if (x.rank() < 1 || w.rank() != 2 || x.shape().back() != w.dim(1)) {
    mismatch("linear", x.shape(), w.shape());
  }
  const std::size_t in_dim = w.dim(1), out_dim = w.dim(0);
  if (b.defined() && (b.rank() != 1 || b.dim(0) != out_dim)) mismatch("linear bias", w.shape(), b.shape());
  const std::size_t rows = x.numel() / in_dim;
  Shape shape = x.shape();
  shape.back() = out_dim;

  std::vector<double> out(rows * out_dim);
  CMat xm(x.data().data(), static_cast<long>(rows), static_cast<long>(in_dim));
  CMat wm(w.data().data(), static_cast<long>(out_dim), static_cast<long>(in_dim));
  Mat ym(out.data(), static_cast<long>(rows), static_cast<long>(out_dim));
  ym.noalias() = xm * wm.transpose();
  if (b.defined()) {
    ym.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(b.data().data(), static_cast<long>(out_dim));
  }

  std::vector<Tensor> inputs{x, w};
  if (b.defined()) inputs.push_back(b);
  const bool has_bias = b.defined();
  return make_result(std::move(shape), std::move(out), std::move(inputs),
                     [rows, in_dim, out_dim, has_bias](Node& self) {
                       const auto r = static_cast<long>(rows), i = static_cast<long>(in_dim),
                                  o = static_cast<long>(out_dim);
                       Node& xn = in(self, 0);
                       Node& wn = in(self, 1);
                       CMat gy(self.grad.data(), r, o);
                       if (xn.requires_grad) {
                         Mat gx(xn.ensure_grad().data(), r, i);
                         gx.noalias() += gy * CMat(wn.value.data(), o, i);
                       }
                       if (wn.requires_grad) {
                         Mat gw(wn.ensure_grad().data(), o, i);
                         gw.noalias() += gy.transpose() * CMat(xn.value.data(), r, i);
                       }
                       if (has_bias) {
                         Node& bn = in(self, 2);
                         if (bn.requires_grad) {
                           Eigen::Map<Eigen::RowVectorXd> gb(bn.ensure_grad().data(), o);
                           gb += gy.colwise().sum();
                         }
                       }
                     });
}

Tensor bmm(const Tensor& a, const Tensor& b, bool transpose_b) {
  if (a.rank() != 3 || b.rank() != 3 || a.dim(0) != b.dim(0)) mismatch("bmm", a.shape(), b.shape());
  const std::size_t g = a.dim(0), n = a.dim(1), k = a.dim(2);
  const std::size_t kb = transpose_b ? b.dim(2) : b.dim(1);
  const std::size_t m = transpose_b ? b.dim(1) : b.dim(2);
  if (kb != k) mismatch("bmm", a.shape(), b.shape());

  const auto ln = static_cast<long>(n), lk = static_cast<long>(k), lm = static_cast<long>(m);
  // Group gi of b as a k x m matrix expression.
  auto bmat = [=](const double* bd, std::size_t gi) -> Eigen::MatrixXd {
    if (transpose_b) return CMat(bd + gi * m * k, lm, lk).transpose();
    return CMat(bd + gi * k * m, lk, lm);
  };

  std::vector<double> out(g * n * m);
  const double* ad = a.data().data();
  const double* bd = b.data().data();
  for (std::size_t gi = 0; gi < g; ++gi) {
    Mat(out.data() + gi * n * m, ln, lm).noalias() = CMat(ad + gi * n * k, ln, lk) * bmat(bd, gi);
  }

  return make_result({g, n, m}, std::move(out), {a, b}, [=](Node& self) {
    Node& an = in(self, 0);
    Node& bn = in(self, 1);
    const double* gy = self.grad.data();
    double* ga = an.requires_grad ? an.ensure_grad().data() : nullptr;
    double* gb = bn.requires_grad ? bn.ensure_grad().data() : nullptr;
    for (std::size_t gi = 0; gi < g; ++gi) {
      CMat gyi(gy + gi * n * m, ln, lm);
      CMat ai(an.value.data() + gi * n * k, ln, lk);
      if (ga) Mat(ga + gi * n * k, ln, lk).noalias() += gyi * bmat(bn.value.data(), gi).transpose();
      if (gb) {
        if (transpose_b) {
          Mat(gb + gi * m * k, lm, lk).noalias() += gyi.transpose() * ai;
        } else {
          Mat(gb + gi * k * m, lk, lm).noalias() += ai.transpose() * gyi;
        }
      }
    }
  });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (numel(shape) != x.numel()) mismatch("reshape", x.shape(), shape);
  std::vector<double> out(x.data().begin(), x.data().end());
  return make_result(std::move(shape), std::move(out), {x}, [](Node& self) {
    auto& g = in(self, 0).ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

Tensor permute(const Tensor& x, const std::vector<std::size_t>& axes) {
  const std::size_t r = x.rank();
  if (axes.size() != r) mismatch("permute", x.shape(), Shape(axes.begin(), axes.end()));
  std::vector<bool> used(r, false);
  Shape out_shape(r);
  for (std::size_t i = 0; i < r; ++i) {
    if (axes[i] >= r || used[axes[i]]) mismatch("permute", x.shape(), Shape(axes.begin(), axes.end()));
    used[axes[i]] = true;
    out_shape[i] = x.dim(axes[i]);
  }
  std::vector<std::size_t> in_strides(r, 1);
  for (std::size_t i = r; i-- > 1;) in_strides[i - 1] = in_strides[i] * x.dim(i);

  // src[i] = input offset of output element i.
  const std::size_t n = x.numel();
  std::vector<std::size_t> src(n);
  std::vector<std::size_t> idx(r, 0);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t off = 0;
    for (std::size_t d = 0; d < r; ++d) off += idx[d] * in_strides[axes[d]];
    src[i] = off;
    for (std::size_t d = r; d-- > 0;) {
      if (++idx[d] < out_shape[d]) break;
      idx[d] = 0;
    }
  }
  std::vector<double> out(n);
  const auto xd = x.data();
  for (std::size_t i = 0; i < n; ++i) out[i] = xd[src[i]];
  return make_result(std::move(out_shape), std::move(out), {x}, [src = std::move(src)](Node& self) {
    auto& g = in(self, 0).ensure_grad();
    for (std::size_t i = 0; i < src.size(); ++i) g[src[i]] += self.grad[i];
  });
}

Tensor slice(const Tensor& x, std::size_t axis, std::size_t begin, std::size_t end) {
  check_axis("slice", x, axis);
  if (begin > end || end > x.dim(axis)) {
    throw ShapeMismatch("slice: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                        ") out of bounds for shape " + to_string(x.shape()));
  }
  std::vector<std::size_t> idx(end - begin);
  std::iota(idx.begin(), idx.end(), begin);
  return index_select(x, axis, idx);
}

Tensor index_select(const Tensor& x, std::size_t axis, const std::vector<std::size_t>& indices) {
  check_axis("index_select", x, axis);
  const AxisSplit s = split_at(x.shape(), axis);
  for (auto i : indices) {
    if (i >= s.n) throw ShapeMismatch("index_select: index " + std::to_string(i) + " out of range");
  }
  const std::size_t k = indices.size();
  Shape shape = x.shape();
  shape[axis] = k;
  std::vector<double> out(s.outer * k * s.inner);
  const auto xd = x.data();
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t j = 0; j < k; ++j)
      std::copy_n(xd.begin() + static_cast<long>((o * s.n + indices[j]) * s.inner), s.inner,
                  out.begin() + static_cast<long>((o * k + j) * s.inner));
  return make_result(std::move(shape), std::move(out), {x}, [s, indices](Node& self) {
    auto& g = in(self, 0).ensure_grad();
    const std::size_t k = indices.size();
    for (std::size_t o = 0; o < s.outer; ++o)
      for (std::size_t j = 0; j < k; ++j) {
        const double* src = self.grad.data() + (o * k + j) * s.inner;
        double* dst = g.data() + (o * s.n + indices[j]) * s.inner;
        for (std::size_t i = 0; i < s.inner; ++i) dst[i] += src[i];
      }
  });
}

Tensor concat(const std::vector<Tensor>& xs, std::size_t axis) {
  if (xs.empty()) throw ShapeMismatch("concat of zero tensors");
  check_axis("concat", xs[0], axis);
  Shape shape = xs[0].shape();
  std::size_t total = 0;
  for (const auto& t : xs) {
    if (t.rank() != shape.size()) mismatch("concat", shape, t.shape());
    for (std::size_t d = 0; d < shape.size(); ++d)
      if (d != axis && t.dim(d) != shape[d]) mismatch("concat", shape, t.shape());
    total += t.dim(axis);
  }
  shape[axis] = total;
  const AxisSplit s = split_at(shape, axis);

  std::vector<std::size_t> widths, starts;
  std::size_t acc = 0;
  for (const auto& t : xs) {
    widths.push_back(t.dim(axis));
    starts.push_back(acc);
    acc += t.dim(axis);
  }
  std::vector<double> out(numel(shape));
  for (std::size_t p = 0; p < xs.size(); ++p) {
    const auto xd = xs[p].data();
    const std::size_t chunk = widths[p] * s.inner;
    for (std::size_t o = 0; o < s.outer; ++o)
      std::copy_n(xd.begin() + static_cast<long>(o * chunk), chunk,
                  out.begin() + static_cast<long>((o * s.n + starts[p]) * s.inner));
  }
  return make_result(std::move(shape), std::move(out), xs, [s, widths, starts](Node& self) {
    for (std::size_t p = 0; p < widths.size(); ++p) {
      Node& xn = in(self, p);
      if (!xn.requires_grad) continue;
      auto& g = xn.ensure_grad();
      const std::size_t chunk = widths[p] * s.inner;
      for (std::size_t o = 0; o < s.outer; ++o) {
        const double* src = self.grad.data() + (o * s.n + starts[p]) * s.inner;
        double* dst = g.data() + o * chunk;
        for (std::size_t i = 0; i < chunk; ++i) dst[i] += src[i];
      }
    }
  });
}

Tensor broadcast_to(const Tensor& x, Shape shape) {
  if (!is_suffix(shape, x.shape())) mismatch("broadcast_to", x.shape(), shape);
  const std::size_t n = numel(shape), m = x.numel();
  std::vector<double> out(n);
  const auto xd = x.data();
  for (std::size_t i = 0; i < n; ++i) out[i] = xd[i % m];
  return make_result(std::move(shape), std::move(out), {x}, [m](Node& self) {
    auto& g = in(self, 0).ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) g[i % m] += self.grad[i];
  });
}

Tensor where(const std::vector<std::uint8_t>& mask, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) mismatch("where", a.shape(), b.shape());
  if (mask.size() != a.numel()) throw ShapeMismatch("where: mask length does not match tensors");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = mask[i] ? b.data()[i] : a.data()[i];
  return make_result(a.shape(), std::move(out), {a, b}, [mask](Node& self) {
    Node& an = in(self, 0);
    Node& bn = in(self, 1);
    if (an.requires_grad) {
      auto& g = an.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i)
        if (!mask[i]) g[i] += self.grad[i];
    }
    if (bn.requires_grad) {
      auto& g = bn.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i)
        if (mask[i]) g[i] += self.grad[i];
    }
  });
}

Tensor softmax(const Tensor& x, std::size_t axis) {
  check_axis("softmax", x, axis);
  const AxisSplit s = split_at(x.shape(), axis);
  std::vector<double> out(x.numel());
  const auto xd = x.data();
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t i = 0; i < s.inner; ++i) {
      const std::size_t base = o * s.n * s.inner + i;
      double mx = -INFINITY;
      for (std::size_t j = 0; j < s.n; ++j) mx = std::max(mx, xd[base + j * s.inner]);
      double z = 0.0;
      for (std::size_t j = 0; j < s.n; ++j) {
        const double e = std::exp(xd[base + j * s.inner] - mx);
        out[base + j * s.inner] = e;
        z += e;
      }
      for (std::size_t j = 0; j < s.n; ++j) out[base + j * s.inner] /= z;
    }
  auto y = out;
  return make_result(x.shape(), std::move(out), {x}, [s, y = std::move(y)](Node& self) {
    auto& g = in(self, 0).ensure_grad();
    for (std::size_t o = 0; o < s.outer; ++o)
      for (std::size_t i = 0; i < s.inner; ++i) {
        const std::size_t base = o * s.n * s.inner + i;
        double dot = 0.0;
        for (std::size_t j = 0; j < s.n; ++j) dot += self.grad[base + j * s.inner] * y[base + j * s.inner];
        for (std::size_t j = 0; j < s.n; ++j) {
          const std::size_t k = base + j * s.inner;
          g[k] += y[k] * (self.grad[k] - dot);
        }
      }
  });
}

namespace {

// Normalizes contiguous segments of `width` values, then applies a
// per-channel affine over the last axis (channels = affine length).
Tensor segment_norm(const char* name, const Tensor& x, std::size_t width, const Tensor& gamma,
                    const Tensor& beta, double eps) {
  const std::size_t c = x.shape().back();
  if (gamma.rank() != 1 || gamma.dim(0) != c) mismatch(name, x.shape(), gamma.shape());
  if (beta.rank() != 1 || beta.dim(0) != c) mismatch(name, x.shape(), beta.shape());
  const std::size_t n = x.numel();
  const std::size_t segs = n / width;
  std::vector<double> xhat(n), inv_std(segs), out(n);
  const auto xd = x.data();
  for (std::size_t s = 0; s < segs; ++s) {
    const double* xs = xd.data() + s * width;
    double mu = 0.0;
    for (std::size_t i = 0; i < width; ++i) mu += xs[i];
    mu /= static_cast<double>(width);
    double var = 0.0;
    for (std::size_t i = 0; i < width; ++i) var += (xs[i] - mu) * (xs[i] - mu);
    var /= static_cast<double>(width);
    inv_std[s] = 1.0 / std::sqrt(var + eps);
    for (std::size_t i = 0; i < width; ++i) xhat[s * width + i] = (xs[i] - mu) * inv_std[s];
  }
  const auto gd = gamma.data();
  const auto bd = beta.data();
  for (std::size_t i = 0; i < n; ++i) out[i] = xhat[i] * gd[i % c] + bd[i % c];

  return make_result(x.shape(), std::move(out), {x, gamma, beta},
                     [=, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node& self) {
                       Node& xn = in(self, 0);
                       Node& gn = in(self, 1);
                       Node& bn = in(self, 2);
                       const double* gy = self.grad.data();
                       if (gn.requires_grad) {
                         auto& gg = gn.ensure_grad();
                         for (std::size_t i = 0; i < n; ++i) gg[i % c] += gy[i] * xhat[i];
                       }
                       if (bn.requires_grad) {
                         auto& gb = bn.ensure_grad();
                         for (std::size_t i = 0; i < n; ++i) gb[i % c] += gy[i];
                       }
                       if (xn.requires_grad) {
                         auto& gx = xn.ensure_grad();
                         const double inv_w = 1.0 / static_cast<double>(width);
                         for (std::size_t s = 0; s < segs; ++s) {
                           double sum_g = 0.0, sum_gx = 0.0;
                           for (std::size_t i = 0; i < width; ++i) {
                             const std::size_t k = s * width + i;
                             const double gh = gy[k] * gn.value[k % c];
                             sum_g += gh;
                             sum_gx += gh * xhat[k];
                           }
                           for (std::size_t i = 0; i < width; ++i) {
                             const std::size_t k = s * width + i;
                             const double gh = gy[k] * gn.value[k % c];
                             gx[k] += inv_std[s] * (gh - inv_w * sum_g - xhat[k] * inv_w * sum_gx);
                           }
                         }
                       }
                     });
}

}  // namespace

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  if (x.rank() < 1) mismatch("layer_norm", x.shape(), gamma.shape());
  return segment_norm("layer_norm", x, x.shape().back(), gamma, beta, eps);
}

Tensor group_norm(const Tensor& x, std::size_t groups, const Tensor& gamma, const Tensor& beta,
                  double eps) {
  if (x.rank() < 1 || groups == 0 || x.shape().back() % groups != 0) {
    throw ShapeMismatch("group_norm: " + std::to_string(groups) + " groups do not divide channels of " +
                        to_string(x.shape()));
  }
  return segment_norm("group_norm", x, x.shape().back() / groups, gamma, beta, eps);
}

std::size_t default_group_count(std::size_t channels) {
  std::size_t g = channels % 32 == 0 ? 32 : std::gcd(channels, std::size_t{32});
  while (g > 1 && channels / g < 4) g /= 2;
  return std::max<std::size_t>(g, 1);
}

}  // namespace jlm::nn
