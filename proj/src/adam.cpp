#include "symgnn/adam.hpp"

#include <cmath>

namespace symgnn::ad {

void AdamState::step(ParameterSet& params) {
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
      v_.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
    }
  }
  if (m_.size() != params.size()) {
    throw ShapeError("Adam state tracks " + std::to_string(m_.size()) + " parameters, got " +
                     std::to_string(params.size()));
  }
  ++steps_;
  const double bc1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(steps_));
  const double bc2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(steps_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = params[i];
    if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols() ||
        m_[i].rows() != p.value.rows() || m_[i].cols() != p.value.cols()) {
      throw ShapeError("Adam: shape drift on parameter '" + p.name + "'");
    }
    m_[i] = opts_.beta1 * m_[i] + (1.0 - opts_.beta1) * p.grad;
    v_[i] = opts_.beta2 * v_[i] + (1.0 - opts_.beta2) * p.grad.cwiseAbs2();
    if (p.decay && opts_.weight_decay != 0.0) {
      p.value *= 1.0 - opts_.lr * opts_.weight_decay;
    }
    p.value.array() -= opts_.lr * (m_[i].array() / bc1) /
                       ((v_[i].array() / bc2).sqrt() + opts_.eps);
  }
}

}  // namespace symgnn::ad
