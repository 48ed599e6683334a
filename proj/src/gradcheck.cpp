#include "hmn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hmn::diff {
namespace {

double evaluate(const LossBuilder& build) {
  Graph g;
  return g.value(build(g)).item();
}

GradCheckResult compare(const LossBuilder& build, Parameter& leaf, const Tensor& analytic,
                        double base, double step, double rel_tol) {
  GradCheckResult r;
  r.leaf = leaf.name;
  auto x = leaf.value.data();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + step;
    const double fp = evaluate(build);
    x[i] = saved - step;
    const double fm = evaluate(build);
    x[i] = saved;
    const double numeric = (fp - fm) / (2.0 * step);
    const double a = analytic[i];
    const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
    const double rel = std::abs(a - numeric) / denom;
    if (rel > r.max_rel_error || r.checked == 0) {
      r.max_rel_error = rel;
      r.worst_index = i;
      r.analytic = a;
      r.numeric = numeric;
    }
    ++r.checked;
  }
  if (evaluate(build) != base) {
    r.status = CheckStatus::inconclusive;
  } else {
    r.status = r.max_rel_error <= rel_tol ? CheckStatus::pass : CheckStatus::fail;
  }
  return r;
}

}  // namespace

std::string to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::pass: return "pass";
    case CheckStatus::fail: return "fail";
    case CheckStatus::inconclusive: return "inconclusive";
  }
  return "?";
}

GradCheckResult finite_diff_check(const LossBuilder& build, Parameter& leaf, double step,
                                  double rel_tol) {
  if (!(step > 0.0)) throw std::invalid_argument("finite difference step must be positive");
  leaf.zero_grad();
  Graph g;
  const auto loss = build(g);
  const double base = g.value(loss).item();
  g.backward(loss);
  const Tensor analytic = leaf.grad;
  if (evaluate(build) != base) {
    GradCheckResult r;
    r.leaf = leaf.name;
    r.status = CheckStatus::inconclusive;
    return r;
  }
  return compare(build, leaf, analytic, base, step, rel_tol);
}

std::vector<GradCheckResult> finite_diff_check_all(const LossBuilder& build, ParamStore& params,
                                                   double step, double rel_tol) {
  if (!(step > 0.0)) throw std::invalid_argument("finite difference step must be positive");
  params.zero_grad();
  Graph g;
  const auto loss = build(g);
  const double base = g.value(loss).item();
  g.backward(loss);
  std::vector<Tensor> analytic;
  for (const auto& p : params) analytic.push_back(p.grad);

  std::vector<GradCheckResult> results;
  const bool drift = evaluate(build) != base;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (drift) {
      GradCheckResult r;
      r.leaf = params[i].name;
      r.status = CheckStatus::inconclusive;
      results.push_back(r);
      continue;
    }
    results.push_back(compare(build, params[i], analytic[i], base, step, rel_tol));
  }
  return results;
}

}  // namespace hmn::diff
