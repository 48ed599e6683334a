#pragma once

#include <functional>
#include <string>
#include <vector>

#include "hmn/graph.hpp"

namespace hmn::diff {

enum class CheckStatus { pass, fail, inconclusive };

struct GradCheckResult {
  CheckStatus status = CheckStatus::pass;
  std::string leaf;
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;  // at worst_index
  double numeric = 0.0;
  std::size_t checked = 0;

  bool passed() const { return status == CheckStatus::pass; }
};

/// Builds a fresh graph from the current parameter values and returns the
/// scalar loss node. Must be a pure function of those values.
using LossBuilder = std::function<NodeId(Graph&)>;

/// Compares the taped gradient of `leaf` with central differences
/// (f(x+h) - f(x-h)) / 2h, element by element. The relative error uses
/// max(|analytic|, |numeric|, 1e-8) as denominator. A builder whose loss at
/// the unperturbed point changes between evaluations is reported inconclusive.
GradCheckResult finite_diff_check(const LossBuilder& build, Parameter& leaf, double step,
                                  double rel_tol);

/// Same check for every parameter in `params`, sharing one backward pass.
std::vector<GradCheckResult> finite_diff_check_all(const LossBuilder& build, ParamStore& params,
                                                   double step, double rel_tol);

std::string to_string(CheckStatus s);

}  // namespace hmn::diff
