#pragma once

#include <stdexcept>
#include <string>

#include "hmn/params.hpp"

namespace hmn::diff {

struct SgdConfig {
  double learning_rate = 0.01;
  double clip_norm = 40.0;
  int anneal_interval_epochs = 15;
  int max_epochs = 60;

  void validate() const;
};

class NonFiniteGradient : public std::runtime_error {
 public:
  NonFiniteGradient(std::string param_name)
      : std::runtime_error("non-finite gradient in parameter '" + param_name + "'"),
        param(std::move(param_name)) {}
  std::string param;
};

/// lambda / 2^floor(epoch / anneal_interval), epochs counted from 0.
double learning_rate_at(const SgdConfig& cfg, int epoch);

struct SgdStepInfo {
  double grad_norm = 0.0;  // before clipping
  double clip_scale = 1.0;
  double learning_rate = 0.0;
};

/// One plain SGD update from the gradients stored in `params`.
/// The global l2 norm is taken over every gradient; if it exceeds
/// cfg.clip_norm all gradients are scaled (in place) by clip_norm / norm first.
/// Nothing is modified when any gradient is non-finite.
SgdStepInfo sgd_step(ParamStore& params, const SgdConfig& cfg, int epoch);

double global_grad_norm(const ParamStore& params);

}  // namespace hmn::diff
