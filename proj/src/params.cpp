#include "hmn/params.hpp"

#include <random>
#include <stdexcept>

namespace hmn::diff {

Parameter::Parameter(std::string n, Tensor v)
    : name(std::move(n)), value(std::move(v)), grad(value.shape()) {
  value.requires_grad = true;
}

std::size_t ParamStore::add(std::string name, Tensor value) {
  if (find(name)) throw std::invalid_argument("duplicate parameter name '" + name + "'");
  params_.emplace_back(std::move(name), std::move(value));
  return params_.size() - 1;
}

std::optional<std::size_t> ParamStore::find(const std::string& name) const {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name == name) return i;
  }
  return std::nullopt;
}

Parameter& ParamStore::get(const std::string& name) {
  auto i = find(name);
  if (!i) throw std::out_of_range("no parameter named '" + name + "'");
  return params_[*i];
}

const Parameter& ParamStore::get(const std::string& name) const {
  auto i = find(name);
  if (!i) throw std::out_of_range("no parameter named '" + name + "'");
  return params_[*i];
}

void ParamStore::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

std::size_t ParamStore::element_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

bool ParamStore::same_values(const ParamStore& other) const {
  if (params_.size() != other.params_.size()) return false;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name != other.params_[i].name) return false;
    if (!(params_[i].value == other.params_[i].value)) return false;
  }
  return true;
}

Tensor init_gaussian(const Shape& shape, std::uint64_t seed, double stddev) {
  if (shape.empty()) throw ShapeError("init_gaussian needs a nonempty shape");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, stddev);
  Tensor t(shape);
  for (auto& x : t.data()) x = dist(rng);
  return t;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace hmn::diff
