#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "jlm/errors.hpp"
#include "jlm/nn/attention.hpp"
#include "jlm/nn/gradcheck.hpp"
#include "jlm/nn/ops.hpp"
#include "jlm/nn/optim.hpp"

using namespace jlm;
using namespace jlm::nn;

namespace {

std::vector<double> randn(std::size_t n, std::mt19937_64& rng, double s = 1.0) {
  std::normal_distribution<double> d(0.0, s);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

Tensor param(Shape s, std::mt19937_64& rng, double scale = 1.0) {
  const std::size_t n = numel(s);
  return Tensor::parameter(std::move(s), randn(n, rng, scale));
}

// sum(op(...) * R) for a fixed random R, checked against central differences.
double check_op(const std::function<Tensor()>& op, std::vector<std::pair<std::string, Tensor>> params,
                std::uint64_t seed = 0) {
  std::mt19937_64 rng(seed);
  const Tensor probe = op();
  const Tensor r = Tensor::constant(probe.shape(), randn(probe.numel(), rng));
  return grad_check([&] { return sum(mul(op(), r)); }, std::move(params)).max_rel_error;
}

// Dense attention oracle on (n, d) tokens with x W^T projections.
std::vector<double> naive_attention(const std::vector<double>& x, std::size_t n, std::size_t d,
                                    const std::vector<double>& wq, const std::vector<double>& wk,
                                    const std::vector<double>& wv, const std::vector<double>& wo,
                                    std::size_t heads) {
  auto project = [&](const std::vector<double>& w) {
    std::vector<double> y(n * d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t o = 0; o < d; ++o) {
        for (std::size_t k = 0; k < d; ++k) y[i * d + o] += x[i * d + k] * w[o * d + k];
      }
    }
    return y;
  };
  const auto q = project(wq), k = project(wk), v = project(wv);
  const std::size_t dh = d / heads;
  std::vector<double> ctx(n * d, 0.0);
  for (std::size_t h = 0; h < heads; ++h) {
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> s(n);
      double mx = -1e300;
      for (std::size_t j = 0; j < n; ++j) {
        double dot = 0.0;
        for (std::size_t c = 0; c < dh; ++c) dot += q[i * d + h * dh + c] * k[j * d + h * dh + c];
        s[j] = dot / std::sqrt(static_cast<double>(dh));
        mx = std::max(mx, s[j]);
      }
      double z = 0.0;
      for (auto& e : s) z += (e = std::exp(e - mx));
      for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t c = 0; c < dh; ++c) ctx[i * d + h * dh + c] += s[j] / z * v[j * d + h * dh + c];
      }
    }
  }
  std::vector<double> out(n * d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t o = 0; o < d; ++o) {
      for (std::size_t c = 0; c < d; ++c) out[i * d + o] += ctx[i * d + c] * wo[o * d + c];
    }
  }
  return out;
}

}  // namespace

TEST_CASE("linear with identity weights is the identity") {
  std::mt19937_64 rng(1);
  const Tensor x = Tensor::constant({3, 4}, randn(12, rng));
  std::vector<double> eye(16, 0.0);
  for (int i = 0; i < 4; ++i) eye[i * 5] = 1.0;
  const Tensor y = linear(x, Tensor::constant({4, 4}, eye), Tensor::zeros({4}));
  for (std::size_t i = 0; i < 12; ++i) CHECK(y.data()[i] == x.data()[i]);
  CHECK_THROWS_AS(linear(x, Tensor::zeros({4, 5}), Tensor()), ShapeMismatch);
}

TEST_CASE("softmax of a uniform vector") {
  for (std::size_t n : {1u, 3u, 7u}) {
    const Tensor s = softmax(Tensor::constant({n}, std::vector<double>(n, 2.5)), 0);
    for (double v : s.data()) CHECK(v == doctest::Approx(1.0 / static_cast<double>(n)).epsilon(1e-15));
  }
  const Tensor big = softmax(Tensor::constant({2}, {1000.0, 1000.0}), 0);
  CHECK(big.data()[0] == doctest::Approx(0.5));
}

TEST_CASE("suffix broadcasting and shape errors") {
  const Tensor a = Tensor::constant({2, 3}, {1, 2, 3, 4, 5, 6});
  const Tensor b = Tensor::constant({3}, {10, 20, 30});
  const Tensor s = add(a, b);
  const std::vector<double> expect{11, 22, 33, 14, 25, 36};
  for (std::size_t i = 0; i < 6; ++i) CHECK(s.data()[i] == expect[i]);
  CHECK_THROWS_AS(add(a, Tensor::zeros({2})), ShapeMismatch);
  CHECK_THROWS_AS(bmm(Tensor::zeros({1, 2, 3}), Tensor::zeros({1, 2, 3})), ShapeMismatch);
  CHECK_THROWS_AS(reshape(a, {4}), ShapeMismatch);
  CHECK_THROWS_AS(concat({a, Tensor::zeros({3, 2})}, 0), ShapeMismatch);
}

TEST_CASE("backward needs a scalar") {
  const Tensor p = Tensor::parameter({2}, {1.0, 2.0});
  CHECK_THROWS_AS(backward(scale(p, 2.0)), GraphError);
}

TEST_CASE("gradient of sum(W x) is x broadcast over rows") {
  std::mt19937_64 rng(2);
  Tensor w = param({3, 4}, rng);
  const std::vector<double> xv = randn(4, rng);
  const Tensor x = Tensor::constant({1, 4}, xv);
  Tensor unused = param({2}, rng);
  backward(sum(linear(x, w, Tensor())));
  for (std::size_t o = 0; o < 3; ++o) {
    for (std::size_t k = 0; k < 4; ++k) CHECK(w.grad()[o * 4 + k] == doctest::Approx(xv[k]).epsilon(1e-15));
  }
  for (double g : unused.grad()) CHECK(g == 0.0);
  const auto r = grad_check([&] { return sum(linear(x, w, Tensor())); }, {{"w", w}, {"unused", unused}});
  CHECK(r.max_rel_error < 1e-8);
}

TEST_CASE("every op matches central differences") {
  std::mt19937_64 rng(3);
  Tensor a = param({2, 3, 4}, rng), b = param({2, 3, 4}, rng), c = param({4}, rng);
  CHECK(check_op([&] { return add(a, c); }, {{"a", a}, {"c", c}}) < 1e-7);
  CHECK(check_op([&] { return sub(a, b); }, {{"a", a}, {"b", b}}) < 1e-7);
  CHECK(check_op([&] { return mul(a, c); }, {{"a", a}, {"c", c}}) < 1e-7);
  CHECK(check_op([&] { return scale(neg(a), 0.3); }, {{"a", a}}) < 1e-7);
  CHECK(check_op([&] { return gelu(a); }, {{"a", a}}) < 1e-7);
  CHECK(check_op([&] { return abs(a); }, {{"a", a}}) < 1e-7);
  CHECK(check_op([&] { return relu(a); }, {{"a", a}}) < 1e-7);
  CHECK(check_op([&] { return mean(mul(a, b)); }, {{"a", a}, {"b", b}}) < 1e-7);
  CHECK(check_op([&] { return softmax(a, 1); }, {{"a", a}}) < 1e-7);
  CHECK(check_op([&] { return softmax(a, 2); }, {{"a", a}}) < 1e-7);
  CHECK(check_op([&] { return permute(a, {2, 0, 1}); }, {{"a", a}}) < 1e-7);
  CHECK(check_op([&] { return reshape(a, {6, 4}); }, {{"a", a}}) < 1e-7);
  CHECK(check_op([&] { return slice(a, 1, 1, 3); }, {{"a", a}}) < 1e-7);
  CHECK(check_op([&] { return index_select(a, 2, {3, 0, 3}); }, {{"a", a}}) < 1e-7);
  CHECK(check_op([&] { return concat({a, b}, 1); }, {{"a", a}, {"b", b}}) < 1e-7);
  CHECK(check_op([&] { return broadcast_to(c, {5, 4}); }, {{"c", c}}) < 1e-7);
  std::vector<std::uint8_t> m(24);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = i % 3 == 0;
  CHECK(check_op([&] { return where(m, a, b); }, {{"a", a}, {"b", b}}) < 1e-7);

  Tensor w = param({5, 4}, rng), bias = param({5}, rng);
  CHECK(check_op([&] { return linear(a, w, bias); }, {{"a", a}, {"w", w}, {"bias", bias}}) < 1e-7);
  Tensor m1 = param({3, 2, 4}, rng), m2 = param({3, 4, 5}, rng), m3 = param({3, 5, 4}, rng);
  CHECK(check_op([&] { return bmm(m1, m2); }, {{"m1", m1}, {"m2", m2}}) < 1e-7);
  CHECK(check_op([&] { return bmm(m1, m3, true); }, {{"m1", m1}, {"m3", m3}}) < 1e-7);

  Tensor gamma = param({4}, rng), beta = param({4}, rng);
  CHECK(check_op([&] { return layer_norm(a, gamma, beta); }, {{"a", a}, {"gamma", gamma}, {"beta", beta}}) < 1e-6);
  Tensor x8 = param({3, 8}, rng), g8 = param({8}, rng), b8 = param({8}, rng);
  CHECK(check_op([&] { return group_norm(x8, 2, g8, b8); }, {{"x", x8}, {"g", g8}, {"b", b8}}) < 1e-6);
  Tensor six = param({2, 5, 6}, rng);
  CHECK(check_op([&] { return sixd_to_matrix(six); }, {{"six", six}}) < 1e-6);
}

TEST_CASE("normalization statistics") {
  std::mt19937_64 rng(4);
  const Tensor x = Tensor::constant({2, 8}, randn(16, rng, 3.0));
  const Tensor ln = layer_norm(x, Tensor::constant({8}, std::vector<double>(8, 1.0)), Tensor::zeros({8}));
  for (std::size_t r = 0; r < 2; ++r) {
    double mu = 0.0, var = 0.0;
    for (std::size_t k = 0; k < 8; ++k) mu += ln.data()[r * 8 + k] / 8.0;
    for (std::size_t k = 0; k < 8; ++k) var += std::pow(ln.data()[r * 8 + k] - mu, 2) / 8.0;
    CHECK(std::abs(mu) < 1e-12);
    CHECK(var == doctest::Approx(1.0).epsilon(1e-4));
  }
  const Tensor gn = group_norm(x, 2, Tensor::constant({8}, std::vector<double>(8, 1.0)), Tensor::zeros({8}));
  for (std::size_t r = 0; r < 2; ++r) {
    for (std::size_t g = 0; g < 2; ++g) {
      double mu = 0.0;
      for (std::size_t k = 0; k < 4; ++k) mu += gn.data()[r * 8 + g * 4 + k] / 4.0;
      CHECK(std::abs(mu) < 1e-12);
    }
  }
  CHECK(default_group_count(512) == 32);
  CHECK(default_group_count(64) == 16);
  CHECK(default_group_count(8) == 2);
  CHECK(default_group_count(24) == 4);
  CHECK(default_group_count(3) == 1);
}

TEST_CASE("attention with a single token is Wo Wv x") {
  std::mt19937_64 rng(5);
  const std::size_t d = 4;
  const auto x = randn(d, rng), wq = randn(16, rng), wk = randn(16, rng), wv = randn(16, rng), wo = randn(16, rng);
  const Tensor out = multi_head_attention(Tensor::constant({1, d}, x), Tensor::constant({d, d}, wq),
                                          Tensor::constant({d, d}, wk), Tensor::constant({d, d}, wv),
                                          Tensor::constant({d, d}, wo), 2);
  for (std::size_t o = 0; o < d; ++o) {
    double expect = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      double vc = 0.0;
      for (std::size_t k = 0; k < d; ++k) vc += wv[c * d + k] * x[k];
      expect += wo[o * d + c] * vc;
    }
    CHECK(out.data()[o] == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("attention matches the dense oracle") {
  std::mt19937_64 rng(6);
  const std::size_t n = 3, d = 4, heads = 2;
  const auto x = randn(n * d, rng), wq = randn(16, rng), wk = randn(16, rng), wv = randn(16, rng), wo = randn(16, rng);
  const Tensor out = multi_head_attention(Tensor::constant({n, d}, x), Tensor::constant({d, d}, wq),
                                          Tensor::constant({d, d}, wk), Tensor::constant({d, d}, wv),
                                          Tensor::constant({d, d}, wo), heads);
  const auto expect = naive_attention(x, n, d, wq, wk, wv, wo, heads);
  for (std::size_t i = 0; i < n * d; ++i) CHECK(std::abs(out.data()[i] - expect[i]) < 1e-6);

  // Batched groups are independent.
  auto x2 = randn(n * d, rng);
  std::vector<double> both = x;
  both.insert(both.end(), x2.begin(), x2.end());
  const Tensor batched = multi_head_attention(Tensor::constant({2, n, d}, both), Tensor::constant({d, d}, wq),
                                              Tensor::constant({d, d}, wk), Tensor::constant({d, d}, wv),
                                              Tensor::constant({d, d}, wo), heads);
  const auto expect2 = naive_attention(x2, n, d, wq, wk, wv, wo, heads);
  for (std::size_t i = 0; i < n * d; ++i) {
    CHECK(std::abs(batched.data()[i] - expect[i]) < 1e-12);
    CHECK(std::abs(batched.data()[n * d + i] - expect2[i]) < 1e-12);
  }
  CHECK_THROWS_AS(multi_head_attention(Tensor::constant({n, d}, x), Tensor::constant({d, d}, wq),
                                       Tensor::constant({d, d}, wk), Tensor::constant({d, d}, wv),
                                       Tensor::constant({d, d}, wo), 3),
                  ShapeMismatch);
}

TEST_CASE("attention gradient") {
  std::mt19937_64 rng(7);
  Tensor x = param({2, 3, 4}, rng), wq = param({4, 4}, rng, 0.5), wk = param({4, 4}, rng, 0.5);
  Tensor wv = param({4, 4}, rng, 0.5), wo = param({4, 4}, rng, 0.5);
  CHECK(check_op([&] { return multi_head_attention(x, wq, wk, wv, wo, 2); },
                 {{"x", x}, {"wq", wq}, {"wk", wk}, {"wv", wv}, {"wo", wo}}) < 1e-6);
}

TEST_CASE("parameter store") {
  ParamStore store;
  std::mt19937_64 rng(8);
  store.add_uniform("a", {4, 3}, 3, rng);
  store.add_constant("b", {2}, 0.5);
  CHECK_THROWS_AS(store.add_constant("a", {1}, 0.0), GraphError);
  CHECK_THROWS_AS(store.at("zzz"), GraphError);
  CHECK(store.scalar_count() == 14);
  const double bound = 1.0 / std::sqrt(3.0);
  for (double v : store.at("a").data()) CHECK(std::abs(v) <= bound);
  CHECK(store.entries()[0].first == "a");
  CHECK(store.entries()[1].first == "b");
}

TEST_CASE("adam") {
  SUBCASE("zero gradients leave parameters unchanged") {
    ParamStore s;
    s.add("w", {3}, {1.0, -2.0, 0.5});
    AdamState st;
    adam_step(s, st, 0.1);
    CHECK(s.at("w").data()[0] == 1.0);
    CHECK(s.at("w").data()[1] == -2.0);
    CHECK(s.step == 1);
  }
  SUBCASE("descends on w^2") {
    ParamStore s;
    Tensor& w = s.add("w", {1}, {1.0});
    AdamState st;
    backward(sum(mul(w, w)));
    adam_step(s, st, 0.1);
    CHECK(w.data()[0] < 1.0);
    CHECK(w.data()[0] == doctest::Approx(0.9).epsilon(1e-6));
    for (double g : w.grad()) CHECK(g == 0.0);
  }
  SUBCASE("reaches the minimum of (w-3)^2") {
    ParamStore s;
    Tensor& w = s.add("w", {1}, {0.0});
    AdamState st;
    const Tensor three = Tensor::constant({1}, {3.0});
    for (int i = 0; i < 500; ++i) {
      const Tensor d = sub(w, three);
      backward(sum(mul(d, d)));
      adam_step(s, st, 0.1);
    }
    CHECK(std::abs(w.data()[0] - 3.0) < 1e-2);
  }
  SUBCASE("scalar reference run") {
    // Hand-rolled Adam on f(w) = (w - 3)^2.
    double w_ref = 0.0, m = 0.0, v = 0.0;
    ParamStore s;
    Tensor& w = s.add("w", {1}, {0.0});
    AdamState st;
    const Tensor three = Tensor::constant({1}, {3.0});
    for (int i = 1; i <= 50; ++i) {
      const double g = 2.0 * (w_ref - 3.0);
      m = 0.9 * m + 0.1 * g;
      v = 0.999 * v + 0.001 * g * g;
      w_ref -= 0.05 * (m / (1 - std::pow(0.9, i))) / (std::sqrt(v / (1 - std::pow(0.999, i))) + 1e-8);
      const Tensor d = sub(w, three);
      backward(sum(mul(d, d)));
      adam_step(s, st, 0.05);
    }
    CHECK(w.data()[0] == doctest::Approx(w_ref).epsilon(1e-12));
  }
  SUBCASE("missing gradient buffer") {
    ParamStore s;
    s.add("w", {2}, {1.0, 2.0});
    s.at("w").node()->grad.clear();
    AdamState st;
    CHECK_THROWS_AS(adam_step(s, st, 0.1), MissingGrad);
  }
}

TEST_CASE("gradcheck on a quadratic") {
  std::mt19937_64 rng(9);
  Tensor w = param({5}, rng);
  const Tensor a = Tensor::constant({5}, randn(5, rng));
  const auto r = grad_check([&] { return sum(mul(mul(w, w), a)); }, {{"w", w}});
  CHECK(r.checked == 5);
  CHECK(r.passed);
  CHECK(r.max_rel_error < 1e-8);
}

TEST_CASE("gradcheck catches a wrong gradient") {
  Tensor w = Tensor::parameter({3}, {0.5, -1.0, 2.0});
  // Claims d/dw (w^2) = w.
  auto bad_square = [](const Tensor& x) {
    std::vector<double> v(x.numel());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = x.data()[i] * x.data()[i];
    return make_result(x.shape(), std::move(v), {x}, [](Node& self) {
      Node& in = *self.inputs[0];
      auto& g = in.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * in.value[i];
    });
  };
  const auto r = grad_check([&] { return sum(bad_square(w)); }, {{"w", w}});
  CHECK_FALSE(r.passed);
  CHECK(r.max_rel_error > 0.4);
}
