#include "symgnn/layers.hpp"

#include <cmath>

namespace symgnn::nn {

Matrix glorot(Index fan_in, Index fan_out, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Matrix w(fan_in, fan_out);
  // Fill column by column so the draw order is independent of storage order.
  for (Index j = 0; j < fan_out; ++j) {
    for (Index i = 0; i < fan_in; ++i) w(i, j) = dist(rng);
  }
  return w;
}

Linear Linear::create(ParameterSet& params, const std::string& name, Index in, Index out,
                      std::mt19937_64& rng) {
  Linear l;
  l.weight = params.add(name + ".weight", glorot(in, out, rng), true);
  l.bias = params.add(name + ".bias", Matrix::Zero(1, out), false);
  return l;
}

Var Linear::forward(Tape& tape, ParameterSet& params, Var x) const {
  return ad::add_row_bias(ad::matmul(x, tape.parameter(params, weight)),
                          tape.parameter(params, bias));
}

Mlp Mlp::create(ParameterSet& params, const std::string& name, Index in, Index width, Index out,
                int depth, Activation hidden, Activation output, std::mt19937_64& rng) {
  if (depth < 1) throw ConfigError("MLP depth must be at least 1");
  Mlp m;
  m.hidden = hidden;
  m.output = output;
  Index fan_in = in;
  for (int d = 0; d < depth; ++d) {
    const Index fan_out = d + 1 == depth ? out : width;
    m.layers.push_back(Linear::create(params, name + "." + std::to_string(d), fan_in, fan_out, rng));
    fan_in = fan_out;
  }
  return m;
}

Var Mlp::forward(Tape& tape, ParameterSet& params, Var x) const {
  for (std::size_t d = 0; d < layers.size(); ++d) {
    x = layers[d].forward(tape, params, x);
    x = ad::activation(x, d + 1 == layers.size() ? output : hidden);
  }
  return x;
}

Matrix cge_adjacency(const SparseMatrix& norm_adj, const Vector& sigma) {
  if (sigma.size() != norm_adj.rows() || norm_adj.rows() != norm_adj.cols()) {
    throw ShapeError("cge_adjacency: sigma of length " + std::to_string(sigma.size()) +
                     " for adjacency " + shape_str(norm_adj));
  }
  Matrix a = (Vector::Ones(sigma.size()) - sigma).asDiagonal() * Matrix(norm_adj);
  a.diagonal() += sigma;
  return a;
}

Var cge_propagate(const SparseMatrix& norm_adj, Var sigma, Var x) {
  const Var self = ad::row_scale(sigma, x);
  const Var keep = ad::shift(ad::scale(sigma, -1.0), 1.0);
  return ad::add(self, ad::row_scale(keep, ad::spmm(norm_adj, x)));
}

}  // namespace symgnn::nn
