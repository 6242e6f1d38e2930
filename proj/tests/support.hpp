#pragma once

// Shared helpers for the test binaries: random instances and brute-force
// reference computations that do not go through the library code under test.

#include "symgnn/common.hpp"
#include "symgnn/base_model.hpp"
#include "symgnn/graph_data.hpp"
#include "symgnn/gradcheck.hpp"
#include "symgnn/model.hpp"
#include "symgnn/ops.hpp"

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace symgnn::testing {

inline Matrix random_matrix(Index rows, Index cols, std::mt19937_64& rng, double lo = -1.0,
                            double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) m(i, j) = u(rng);
  }
  return m;
}

inline Matrix random_binary(Index rows, Index cols, double p, std::mt19937_64& rng) {
  std::bernoulli_distribution b(p);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) m(i, j) = b(rng) ? 1.0 : 0.0;
  }
  return m;
}

inline SparseMatrix to_sparse(const Matrix& d) {
  SparseMatrix s = d.sparseView();
  s.makeCompressed();
  return s;
}

// Symmetric Erdos-Renyi adjacency with zero diagonal.
inline Matrix erdos_renyi(Index n, double p, std::mt19937_64& rng) {
  std::bernoulli_distribution b(p);
  Matrix a = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      if (b(rng)) a(i, j) = a(j, i) = 1.0;
    }
  }
  return a;
}

// D^{-1/2} A D^{-1/2} evaluated entry by entry.
inline Matrix dense_normalize(const Matrix& a) {
  const Index n = a.rows();
  Matrix out = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      const double di = a.row(i).sum();
      const double dj = a.row(j).sum();
      if (di > 0.0 && dj > 0.0) out(i, j) = a(i, j) / std::sqrt(di * dj);
    }
  }
  return out;
}

inline Network dense_network(const Matrix& adjacency, Index feature_dim = 1) {
  Network net;
  net.adjacency = to_sparse(adjacency);
  net.features = Matrix::Ones(adjacency.rows(), feature_dim);
  return net;
}

// exp(<u_i, v_j>) / sum_k exp(<u_i, v_k>) with long double accumulation.
inline Matrix naive_softmax_gram(const Matrix& u, const Matrix& v) {
  Matrix out(u.rows(), v.rows());
  for (Index i = 0; i < u.rows(); ++i) {
    long double mx = -INFINITY;
    std::vector<long double> logits(static_cast<std::size_t>(v.rows()));
    for (Index j = 0; j < v.rows(); ++j) {
      long double s = 0.0L;
      for (Index k = 0; k < u.cols(); ++k) s += static_cast<long double>(u(i, k)) * v(j, k);
      logits[static_cast<std::size_t>(j)] = s;
      mx = std::max(mx, s);
    }
    long double z = 0.0L;
    for (auto& l : logits) {
      l = std::exp(l - mx);
      z += l;
    }
    for (Index j = 0; j < v.rows(); ++j) {
      out(i, j) = static_cast<double>(logits[static_cast<std::size_t>(j)] / z);
    }
  }
  return out;
}

inline Matrix relu(const Matrix& x) { return x.cwiseMax(0.0); }

// diag(s) + (I - diag(s)) A, formed densely.
inline Matrix dense_cge(const Matrix& norm_adj, const Vector& s) {
  const Index n = norm_adj.rows();
  Matrix out = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) out(i, j) = (1.0 - s(i)) * norm_adj(i, j);
    out(i, i) += s(i);
  }
  return out;
}

inline Vector logistic(const Matrix& raw) {
  Vector s(raw.rows());
  for (Index i = 0; i < raw.rows(); ++i) s(i) = 1.0 / (1.0 + std::exp(-raw(i, 0)));
  return s;
}

// Base model configured as one step of the classic Sylvester iteration: only
// the CGE channel (one level, factor I) and the prior channel with identity
// mixing, identity encoders fed U1 = H and U2 = I, fusion weights alpha and
// 1 - alpha, linear activations, identity output map. Returns the largest
// absolute gap to alpha * A1 H A2^T + (1 - alpha) H with A the CGE
// adjacencies at random sigma.
inline double linear_case_gap(std::mt19937_64& rng, Index n, double alpha) {
  const Matrix h = random_binary(n, n, 0.5, rng);
  Dataset data;
  data.users = dense_network(erdos_renyi(n, 0.5, rng));
  data.items = dense_network(erdos_renyi(n, 0.5, rng));
  data.users.features = h;
  data.items.features = Matrix::Identity(n, n);
  data.prior.h = h;
  data.prior.mask = Matrix::Ones(n, n);
  data.prior.classes = {0.0, 1.0};

  ModelConfig cfg = default_config(ModelKind::base);
  cfg.hidden_dim = n;
  cfg.cge_levels = 1;
  cfg.encoder_depth = 1;
  cfg.use_cge = true;
  cfg.use_attention = false;
  cfg.use_prior = true;
  cfg.use_cross = false;
  cfg.prior_mixing = PriorMixing::identity;
  cfg.encoder_activation = ad::Activation::linear;
  cfg.channel_activation = ad::Activation::linear;
  cfg.fusion_activation = ad::Activation::linear;
  cfg.affine_output = false;

  const ModelInputs in = make_model_inputs(data, data.prior.mask, cfg);
  BaseModel model(in, cfg);
  auto& p = model.params();
  for (const nn::Mlp* enc : {&model.enc1, &model.enc2}) {
    p[enc->layers.front().weight].value = Matrix::Identity(n, n);
    p[enc->layers.front().bias].value.setZero();
  }
  p[model.cge_factors.front()].value = Matrix::Identity(n, n);
  p[model.sigma1].value = random_matrix(n, 1, rng, -2.0, 2.0);
  p[model.sigma2].value = random_matrix(n, 1, rng, -2.0, 2.0);
  p[model.fusion].value.col(0).setConstant(alpha);
  p[model.fusion].value.col(1).setConstant(1.0 - alpha);

  ad::Tape tape;
  const Matrix x = model.forward_rows(tape, all_rows(n)).value();

  const Matrix a1 = dense_cge(dense_normalize(Matrix(data.users.adjacency)), logistic(p[model.sigma1].value));
  const Matrix a2 = dense_cge(dense_normalize(Matrix(data.items.adjacency)), logistic(p[model.sigma2].value));
  const Matrix expect = alpha * a1 * h * a2.transpose() + (1.0 - alpha) * h;
  return (x - expect).cwiseAbs().maxCoeff();
}

inline ad::ParameterSet random_params(const std::vector<std::pair<Index, Index>>& shapes, std::uint64_t seed,
                                      double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  ad::ParameterSet p;
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    p.add("p" + std::to_string(i), random_matrix(shapes[i].first, shapes[i].second, rng, lo, hi));
  }
  return p;
}

// Contracts an op output with a fixed random matrix so every output entry
// carries a distinct gradient, then runs the finite-difference check.
inline ad::GradCheckReport check_op(ad::ParameterSet& params,
                                     const std::function<ad::Var(ad::Tape&, std::vector<ad::Var>&)>& op,
                                     std::uint64_t seed, double eps, double tol) {
  std::mt19937_64 rng(seed);
  Matrix weights;
  const ad::LossClosure loss = [&](ad::Tape& tape) {
    std::vector<ad::Var> leaves;
    for (std::size_t i = 0; i < params.size(); ++i) leaves.push_back(tape.parameter(params, i));
    const ad::Var out = op(tape, leaves);
    if (weights.size() == 0) weights = random_matrix(out.rows(), out.cols(), rng);
    return ad::sum(ad::hadamard(out, tape.constant(weights)));
  };
  return ad::finite_diff_check(loss, params, eps, tol);
}

struct OpCheck {
  std::string name;
  ad::GradCheckReport report;
};

// Central-difference check of every differentiable op on 3x4-sized inputs.
inline std::vector<OpCheck> check_all_ops(double eps, double tol) {
  using namespace ad;
  struct Case {
    const char* name;
    std::vector<std::pair<Index, Index>> shapes;
    std::function<Var(Tape&, std::vector<Var>&)> op;
  };
  std::mt19937_64 rng(12);
  const Matrix h = random_matrix(3, 4, rng);
  const Matrix mask = random_binary(3, 4, 0.5, rng);
  const SparseMatrix sp = to_sparse(random_binary(3, 3, 0.5, rng).cwiseProduct(random_matrix(3, 3, rng)));
  const Vector target = random_matrix(5, 1, rng);
  const std::vector<Index> rows{2, 0, 2};
  const std::vector<Index> pr{0, 1, 2, 2, 1};
  const std::vector<Index> pc{3, 0, 1, 3, 3};
  const std::vector<Case> cases = {
      {"matmul", {{3, 4}, {4, 2}}, [](Tape&, auto& v) { return matmul(v[0], v[1]); }},
      {"add", {{3, 4}, {3, 4}}, [](Tape&, auto& v) { return add(v[0], v[1]); }},
      {"sub", {{3, 4}, {3, 4}}, [](Tape&, auto& v) { return sub(v[0], v[1]); }},
      {"hadamard", {{3, 4}, {3, 4}}, [](Tape&, auto& v) { return hadamard(v[0], v[1]); }},
      {"transpose", {{3, 4}}, [](Tape&, auto& v) { return transpose(v[0]); }},
      {"scale", {{3, 4}}, [](Tape&, auto& v) { return scale(v[0], -2.5); }},
      {"shift", {{3, 4}}, [](Tape&, auto& v) { return shift(v[0], 0.75); }},
      {"relu", {{3, 4}}, [](Tape&, auto& v) { return activation(v[0], Activation::relu); }},
      {"sigmoid", {{3, 4}}, [](Tape&, auto& v) { return activation(v[0], Activation::sigmoid); }},
      {"tanh", {{3, 4}}, [](Tape&, auto& v) { return activation(v[0], Activation::tanh); }},
      {"linear", {{3, 4}}, [](Tape&, auto& v) { return activation(v[0], Activation::linear); }},
      {"row_softmax_gram", {{3, 4}, {5, 4}}, [](Tape&, auto& v) { return row_softmax_gram(v[0], v[1]); }},
      {"row_softmax_gram_self", {{3, 4}}, [](Tape&, auto& v) { return row_softmax_gram(v[0], v[0]); }},
      {"masked_mse", {{3, 4}}, [&](Tape&, auto& v) { return masked_mse(v[0], h, mask, 3.0); }},
      {"entry_mse", {{5, 1}}, [&](Tape&, auto& v) { return entry_mse(v[0], target, 2.0); }},
      {"sum", {{3, 4}}, [](Tape&, auto& v) { return ad::sum(v[0]); }},
      {"spmm", {{3, 4}}, [&](Tape&, auto& v) { return spmm(sp, v[0]); }},
      {"row_scale", {{3, 1}, {3, 4}}, [](Tape&, auto& v) { return row_scale(v[0], v[1]); }},
      {"add_row_bias", {{3, 4}, {1, 4}}, [](Tape&, auto& v) { return add_row_bias(v[0], v[1]); }},
      {"scalar_affine", {{3, 4}, {1, 1}, {1, 1}},
       [](Tape&, auto& v) { return scalar_affine(v[0], v[1], v[2]); }},
      {"concat_cols", {{3, 4}, {3, 2}}, [](Tape&, auto& v) { return concat_cols({v[0], v[1]}); }},
      {"select_rows", {{3, 4}}, [&](Tape&, auto& v) { return select_rows(v[0], rows); }},
      {"column", {{3, 4}}, [](Tape&, auto& v) { return column(v[0], 2); }},
      {"pair_dot", {{3, 4}, {4, 4}}, [&](Tape&, auto& v) { return pair_dot(v[0], v[1], pr, pc); }},
  };
  std::uint64_t seed = 100;
  std::vector<OpCheck> out;
  for (const Case& c : cases) {
    // relu kinks: keep inputs away from zero
    ad::ParameterSet p = random_params(c.shapes, seed++);
    if (std::string(c.name) == "relu") {
      for (auto& param : p) {
        param.value = param.value.unaryExpr([](double x) { return x >= 0 ? x + 0.1 : x - 0.1; });
      }
    }
    out.push_back({c.name, check_op(p, c.op, seed++, eps, tol)});
  }
  return out;
}

}  // namespace symgnn::testing
