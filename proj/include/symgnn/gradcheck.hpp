#pragma once

#include "symgnn/tape.hpp"

#include <functional>
#include <string>
#include <vector>

namespace symgnn::ad {

// Builds the loss on the given tape from the current parameter values. Must be
// deterministic.
using LossClosure = std::function<Var(Tape&)>;

struct GradCheckEntry {
  std::string name;
  std::size_t elements = 0;
  // max |analytic - numeric| / max(max|analytic|, max|numeric|, 1e-6)
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  bool passed = false;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double tolerance = 0.0;
  bool passed() const;
  double worst() const;
};

// Compares backward() gradients with central differences
// (f(p + eps) - f(p - eps)) / 2 eps for every element of every parameter.
// The relative error is taken against the parameter's largest gradient
// magnitude so that near-zero entries do not inflate it.
GradCheckReport finite_diff_check(const LossClosure& loss, ParameterSet& params, double eps = 1e-6,
                                  double tolerance = 1e-4);

}  // namespace symgnn::ad
