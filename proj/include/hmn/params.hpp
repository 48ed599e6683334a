#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hmn/tensor.hpp"

namespace hmn::diff {

/// A learnable tensor together with its gradient accumulator.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter(std::string n, Tensor v);
  void zero_grad() { grad.fill(0.0); }
};

/// Ordered name -> parameter collection. Declaration order is the order used
/// by checkpoints and by seeded initialization.
class ParamStore {
 public:
  std::size_t add(std::string name, Tensor value);

  std::size_t size() const { return params_.size(); }
  Parameter& operator[](std::size_t i) { return params_[i]; }
  const Parameter& operator[](std::size_t i) const { return params_[i]; }
  std::optional<std::size_t> find(const std::string& name) const;
  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  void zero_grad();
  std::size_t element_count() const;

  /// True when names, shapes and values match bit for bit.
  bool same_values(const ParamStore& other) const;

 private:
  std::vector<Parameter> params_;
};

/// i.i.d. N(0, stddev^2) samples; identical for identical (shape, seed).
Tensor init_gaussian(const Shape& shape, std::uint64_t seed, double stddev = 0.1);

/// SplitMix64 finalizer, used to derive independent seeds from (seed, index).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace hmn::diff
