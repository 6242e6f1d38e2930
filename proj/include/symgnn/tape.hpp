#pragma once

// Reverse-mode differentiation over dense matrices.
//
// A Tape records every intermediate matrix of a forward pass together with a
// backward rule. Nodes are appended in evaluation order, so the node vector is
// already a topological order and backward() is a single reverse sweep. Vars
// are lightweight handles (tape pointer + node index) and must not outlive the
// tape that produced them.

#include "symgnn/common.hpp"

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace symgnn::ad {

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  bool decay = true;  // subject to decoupled weight decay
};

// Named, ordered collection of learnable matrices. Indices returned by add()
// stay valid for the lifetime of the set.
class ParameterSet {
 public:
  std::size_t add(std::string name, Matrix value, bool decay = true);

  Parameter& operator[](std::size_t i) { return params_.at(i); }
  const Parameter& operator[](std::size_t i) const { return params_.at(i); }

  Parameter* find(std::string_view name);
  const Parameter* find(std::string_view name) const;

  std::size_t size() const { return params_.size(); }
  std::size_t element_count() const;
  void zero_grad();

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::vector<Parameter> params_;
};

class Tape;

class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  // Scalar value of a 1x1 node.
  double item() const;

  Tape& tape() const { return *tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  int id_ = -1;
  friend class Tape;
};

struct TapeStats {
  std::size_t nodes = 0;
  // Elements held by non-parameter nodes (activations and on-tape constants).
  std::size_t activation_elements = 0;
  // Largest single non-parameter node.
  Index largest_rows = 0;
  Index largest_cols = 0;
  // max over non-parameter nodes of min(rows, cols); a node-count-squared
  // matrix shows up here as a value >= the smaller node count.
  Index largest_min_dim = 0;
};

class Tape {
 public:
  // Receives the node's own forward value and the incoming gradient.
  using BackwardFn = std::function<void(Tape&, const Matrix& value, const Matrix& grad_out)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  // Leaf bound to a parameter; backward() adds its gradient into param.grad.
  Var parameter(Parameter& param);
  Var parameter(ParameterSet& set, std::size_t index) { return parameter(set[index]); }

  // Appends a node. The backward rule runs only if some parent requires a
  // gradient.
  Var record(Matrix value, const std::vector<Var>& parents, BackwardFn backward);

  // Seeds d(loss)/d(loss) = 1 and sweeps the tape in reverse.
  void backward(Var loss);

  bool requires_grad(Var v) const { return node(v).requires_grad; }
  const Matrix& value(Var v) const { return node(v).value; }
  // Gradient accumulated on an arbitrary node during the last backward().
  // Zero-filled if nothing reached it.
  Matrix grad(Var v) const;

  template <typename Derived>
  void accumulate(Var v, const Eigen::MatrixBase<Derived>& g) {
    Node& n = node(v);
    if (!n.requires_grad) return;
    if (n.grad.size() == 0) {
      n.grad = g;
    } else {
      n.grad += g;
    }
  }

  TapeStats stats() const;

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    BackwardFn backward;
    Parameter* param = nullptr;
    bool requires_grad = false;
  };

  Node& node(Var v);
  const Node& node(Var v) const;

  std::vector<Node> nodes_;
};

}  // namespace symgnn::ad
