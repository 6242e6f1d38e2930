#pragma once

#include "symgnn/common.hpp"
#include "symgnn/tape.hpp"

#include <vector>

namespace symgnn::ad {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

// Adam with decoupled weight decay. Moments are allocated lazily on the first
// step so a state can be constructed before the parameter set is final.
class AdamState {
 public:
  explicit AdamState(AdamOptions opts = {}) : opts_(opts) {}

  // One update from the gradients currently stored in params. Decay-enabled
  // parameters are first shrunk by lr * weight_decay, then the bias-corrected
  // Adam delta is applied.
  void step(ParameterSet& params);

  const AdamOptions& options() const { return opts_; }
  AdamOptions& options() { return opts_; }
  long step_count() const { return steps_; }
  const std::vector<Matrix>& first_moment() const { return m_; }
  const std::vector<Matrix>& second_moment() const { return v_; }

 private:
  AdamOptions opts_;
  long steps_ = 0;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
};

inline void adam_step(ParameterSet& params, AdamState& state) { state.step(params); }

}  // namespace symgnn::ad
