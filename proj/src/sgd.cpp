#include "hmn/sgd.hpp"

#include <cmath>

namespace hmn::diff {

void SgdConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
  if (!(clip_norm > 0.0)) throw std::invalid_argument("clip_norm must be positive");
  if (anneal_interval_epochs < 1) throw std::invalid_argument("anneal interval must be >= 1");
  if (max_epochs < 1) throw std::invalid_argument("max_epochs must be >= 1");
}

double learning_rate_at(const SgdConfig& cfg, int epoch) {
  const int halvings = epoch / cfg.anneal_interval_epochs;
  return std::ldexp(cfg.learning_rate, -halvings);
}

double global_grad_norm(const ParamStore& params) {
  double sq = 0.0;
  for (const auto& p : params) sq += p.grad.squared_norm();
  return std::sqrt(sq);
}

SgdStepInfo sgd_step(ParamStore& params, const SgdConfig& cfg, int epoch) {
  cfg.validate();
  for (const auto& p : params) {
    for (double g : p.grad.data()) {
      if (!std::isfinite(g)) throw NonFiniteGradient(p.name);
    }
  }
  SgdStepInfo info;
  info.grad_norm = global_grad_norm(params);
  info.learning_rate = learning_rate_at(cfg, epoch);
  if (info.grad_norm > cfg.clip_norm) {
    info.clip_scale = cfg.clip_norm / info.grad_norm;
    for (auto& p : params) p.grad.scale_(info.clip_scale);
  }

  const double step = info.learning_rate;
  for (auto& p : params) {
    auto v = p.value.data();
    auto g = p.grad.data();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= step * g[i];
  }
  return info;
}

}  // namespace hmn::diff
