#include "symgnn/tape.hpp"

#include <algorithm>

namespace symgnn::ad {

std::size_t ParameterSet::add(std::string name, Matrix value, bool decay) {
  if (find(name) != nullptr) {
    throw ConfigError("duplicate parameter name '" + name + "'");
  }
  Parameter p;
  p.name = std::move(name);
  p.grad = Matrix::Zero(value.rows(), value.cols());
  p.value = std::move(value);
  p.decay = decay;
  params_.push_back(std::move(p));
  return params_.size() - 1;
}

Parameter* ParameterSet::find(std::string_view name) {
  auto it = std::find_if(params_.begin(), params_.end(),
                         [&](const Parameter& p) { return p.name == name; });
  return it == params_.end() ? nullptr : &*it;
}

const Parameter* ParameterSet::find(std::string_view name) const {
  return const_cast<ParameterSet*>(this)->find(name);
}

std::size_t ParameterSet::element_count() const {
  std::size_t total = 0;
  for (const auto& p : params_) total += static_cast<std::size_t>(p.value.size());
  return total;
}

void ParameterSet::zero_grad() {
  for (auto& p : params_) p.grad.setZero(p.value.rows(), p.value.cols());
}

const Matrix& Var::value() const { return tape_->value(*this); }

double Var::item() const {
  const Matrix& v = value();
  if (v.size() != 1) {
    throw ShapeError("item() on non-scalar node of shape " + shape_str(v));
  }
  return v(0, 0);
}

Tape::Node& Tape::node(Var v) {
  if (v.tape_ != this || v.id_ < 0 || v.id_ >= static_cast<int>(nodes_.size())) {
    throw std::logic_error("Var does not belong to this tape");
  }
  return nodes_[static_cast<std::size_t>(v.id_)];
}

const Tape::Node& Tape::node(Var v) const { return const_cast<Tape*>(this)->node(v); }

Var Tape::constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::parameter(Parameter& param) {
  Node n;
  n.value = param.value;
  n.param = &param;
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::record(Matrix value, const std::vector<Var>& parents, BackwardFn backward) {
  Node n;
  n.value = std::move(value);
  for (const Var& p : parents) {
    if (node(p).requires_grad) n.requires_grad = true;
  }
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

void Tape::backward(Var loss) {
  Node& root = node(loss);
  if (root.value.size() != 1) {
    throw ShapeError("backward() needs a scalar loss, got " + shape_str(root.value));
  }
  for (auto& n : nodes_) n.grad.resize(0, 0);
  if (!root.requires_grad) return;
  root.grad = Matrix::Ones(1, 1);
  for (int id = loss.id_; id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.grad.size() == 0) continue;
    if (n.param != nullptr) {
      n.param->grad += n.grad;
    } else if (n.backward) {
      // Rules only touch grads of earlier nodes and never append, so the
      // reference stays valid.
      n.backward(*this, n.value, n.grad);
    }
  }
}

Matrix Tape::grad(Var v) const {
  const Node& n = node(v);
  if (n.grad.size() == 0) return Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

TapeStats Tape::stats() const {
  TapeStats s;
  s.nodes = nodes_.size();
  for (const auto& n : nodes_) {
    if (n.param != nullptr) continue;
    s.activation_elements += static_cast<std::size_t>(n.value.size());
    if (n.value.size() > s.largest_rows * s.largest_cols) {
      s.largest_rows = n.value.rows();
      s.largest_cols = n.value.cols();
    }
    s.largest_min_dim = std::max(s.largest_min_dim, std::min(n.value.rows(), n.value.cols()));
  }
  return s;
}

}  // namespace symgnn::ad
