#include "jlm/nn/optim.hpp"

#include <cmath>

#include "jlm/errors.hpp"

namespace jlm::nn {

Tensor& ParamStore::add(const std::string& name, Shape shape, std::vector<double> values) {
  if (index_.count(name)) throw GraphError("duplicate parameter name '" + name + "'");
  index_.emplace(name, params_.size());
  params_.emplace_back(name, Tensor::parameter(std::move(shape), std::move(values)));
  return params_.back().second;
}

Tensor& ParamStore::add_uniform(const std::string& name, Shape shape, std::size_t fan_in,
                                std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> v(numel(shape));
  for (auto& x : v) x = dist(rng);
  return add(name, std::move(shape), std::move(v));
}

Tensor& ParamStore::add_normal(const std::string& name, Shape shape, double stddev,
                               std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  std::vector<double> v(numel(shape));
  for (auto& x : v) x = dist(rng);
  return add(name, std::move(shape), std::move(v));
}

Tensor& ParamStore::add_constant(const std::string& name, Shape shape, double value) {
  std::vector<double> v(numel(shape), value);
  return add(name, std::move(shape), std::move(v));
}

Tensor& ParamStore::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw GraphError("unknown parameter '" + name + "'");
  return params_[it->second].second;
}

const Tensor& ParamStore::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw GraphError("unknown parameter '" + name + "'");
  return params_[it->second].second;
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, t] : params_) n += t.numel();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& [_, t] : params_) t.zero_grad();
}

bool ParamStore::all_finite() const {
  for (const auto& [_, t] : params_)
    for (double v : t.data())
      if (!std::isfinite(v)) return false;
  return true;
}

void adam_step(ParamStore& store, AdamState& state, double lr) {
  for (const auto& [name, t] : store.entries()) {
    if (t.grad().size() != t.numel()) throw MissingGrad("parameter '" + name + "' has no gradient");
  }
  const double step = static_cast<double>(store.step + 1);
  const double bc1 = 1.0 - std::pow(state.beta1, step);
  const double bc2 = 1.0 - std::pow(state.beta2, step);
  for (auto& [name, t] : store.entries()) {
    auto& m = state.first_moment[name];
    auto& v = state.second_moment[name];
    if (m.size() != t.numel()) m.assign(t.numel(), 0.0);
    if (v.size() != t.numel()) v.assign(t.numel(), 0.0);
    auto w = t.mutable_data();
    auto g = t.mutable_grad();
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      w[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + state.eps);
      g[i] = 0.0;
    }
  }
  ++store.step;
}

}  // namespace jlm::nn
