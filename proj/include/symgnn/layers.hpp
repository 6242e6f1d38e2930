#pragma once

// Building blocks shared by both model instantiations.

#include "symgnn/common.hpp"
#include "symgnn/ops.hpp"
#include "symgnn/tape.hpp"

#include <random>
#include <string>
#include <vector>

namespace symgnn::nn {

using ad::Activation;
using ad::ParameterSet;
using ad::Tape;
using ad::Var;

// Uniform Glorot initialization, limit sqrt(6 / (fan_in + fan_out)).
Matrix glorot(Index fan_in, Index fan_out, std::mt19937_64& rng);

struct Linear {
  std::size_t weight = 0;
  std::size_t bias = 0;

  static Linear create(ParameterSet& params, const std::string& name, Index in, Index out,
                       std::mt19937_64& rng);
  Var forward(Tape& tape, ParameterSet& params, Var x) const;
};

struct Mlp {
  std::vector<Linear> layers;
  Activation hidden = Activation::relu;
  Activation output = Activation::linear;

  // depth 1 is a single affine map in -> out; depth k inserts k-1 hidden
  // layers of width `width`.
  static Mlp create(ParameterSet& params, const std::string& name, Index in, Index width, Index out,
                    int depth, Activation hidden, Activation output, std::mt19937_64& rng);
  Var forward(Tape& tape, ParameterSet& params, Var x) const;
};

// Dense diag(sigma) + (I - diag(sigma)) * norm_adj.
Matrix cge_adjacency(const SparseMatrix& norm_adj, const Vector& sigma);

// (diag(sigma) + (I - diag(sigma)) * norm_adj) * x without forming the
// adjacency densely. sigma is an n x 1 node with entries in (0, 1).
Var cge_propagate(const SparseMatrix& norm_adj, Var sigma, Var x);

}  // namespace symgnn::nn
