#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "jlm/nn/tensor.hpp"

namespace jlm::nn {

// Named parameters in insertion order, plus the optimizer step counter.
class ParamStore {
 public:
  // Throws GraphError on a duplicate name.
  Tensor& add(const std::string& name, Shape shape, std::vector<double> values);
  // uniform(-1/sqrt(fan_in), +1/sqrt(fan_in))
  Tensor& add_uniform(const std::string& name, Shape shape, std::size_t fan_in, std::mt19937_64& rng);
  Tensor& add_normal(const std::string& name, Shape shape, double stddev, std::mt19937_64& rng);
  Tensor& add_constant(const std::string& name, Shape shape, double value);

  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  const std::vector<std::pair<std::string, Tensor>>& entries() const { return params_; }
  std::vector<std::pair<std::string, Tensor>>& entries() { return params_; }
  std::size_t size() const { return params_.size(); }
  std::size_t scalar_count() const;

  void zero_grad();
  bool all_finite() const;

  std::uint64_t step = 0;

 private:
  std::vector<std::pair<std::string, Tensor>> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::unordered_map<std::string, std::vector<double>> first_moment;
  std::unordered_map<std::string, std::vector<double>> second_moment;
};

// Bias-corrected Adam; clears gradients and increments store.step.
// Throws MissingGrad if a parameter has no gradient buffer.
void adam_step(ParamStore& store, AdamState& state, double lr);

}  // namespace jlm::nn
