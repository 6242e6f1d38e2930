#include "symgnn/base_model.hpp"

#include <random>
#include <string>

namespace symgnn {

using ad::Activation;
using ad::Tape;
using ad::Var;

Var cge_channel(const SparseMatrix& a1, Var sigma1, const SparseMatrix& a2, Var sigma2, Var u1,
                Var u2, const std::vector<Var>& factors, Activation phi,
                const std::vector<Index>& rows) {
  if (factors.empty()) throw ConfigError("cge_channel needs at least one level");
  Var s = u1;
  Var t = u2;
  Var total;
  for (const Var& w : factors) {
    s = nn::cge_propagate(a1, sigma1, s);
    t = nn::cge_propagate(a2, sigma2, t);
    // A1^i U1 W' (A2^i U2 W')^T = A1^i U1 W' W'^T U2^T (A2^i)^T
    const Var left = ad::matmul(ad::select_rows(s, rows), w);
    const Var right = ad::matmul(t, w);
    const Var level = ad::activation(ad::matmul(left, ad::transpose(right)), phi);
    total = total.valid() ? ad::add(total, level) : level;
  }
  return total;
}

Var attention_channel(Var u1, Var u2, Var w, Activation phi, const std::vector<Index>& rows) {
  const Var u1r = ad::select_rows(u1, rows);
  const Var b1u1 = ad::matmul(ad::row_softmax_gram(u1r, u1), u1);
  const Var b2u2 = ad::matmul(ad::row_softmax_gram(u2, u2), u2);
  return ad::activation(ad::matmul(ad::matmul(b1u1, w), ad::transpose(b2u2)), phi);
}

Var prior_channel(Var u1, Var u2, const Matrix& h, PriorMixing mixing, Activation phi,
                  const std::vector<Index>& rows) {
  Tape& tape = u1.tape();
  if (h.rows() != u1.rows() || h.cols() != u2.rows()) {
    throw ShapeError("prior_channel: H is " + shape_str(h) + " but embeddings are " +
                     shape_str(u1.value()) + " and " + shape_str(u2.value()));
  }
  if (!((h.array() == 0.0) || (h.array() == 1.0)).all()) {
    throw ConfigError("prior channel requires a binary association matrix");
  }
  if (mixing == PriorMixing::identity) {
    Matrix hr = h(rows, Eigen::all);
    return ad::activation(tape.constant(std::move(hr)), phi);
  }
  const Var p1 = ad::row_softmax_gram(ad::select_rows(u1, rows), u1);
  const Var p2 = ad::row_softmax_gram(u2, u2);
  const Var p1h = ad::matmul(p1, tape.constant(h));
  return ad::activation(ad::matmul(p1h, ad::transpose(p2)), phi);
}

Var cross_attention_channel(Var u1, Var u2, Activation phi, const std::vector<Index>& rows) {
  const Var u1r = ad::select_rows(u1, rows);
  const Var c = ad::row_softmax_gram(u1r, u2);
  const Var gram = ad::matmul(u1r, ad::transpose(u2));
  return ad::activation(ad::hadamard(ad::scale(c, static_cast<double>(u2.rows())), gram), phi);
}

Var fuse_channels(const std::vector<Var>& channels, Var weights) {
  if (channels.empty()) throw ConfigError("fuse_channels: no channels enabled");
  if (weights.cols() != static_cast<Index>(channels.size()) ||
      weights.rows() != channels.front().rows()) {
    throw ShapeError("fuse_channels: weights " + shape_str(weights.value()) + " for " +
                     std::to_string(channels.size()) + " channels of " +
                     shape_str(channels.front().value()));
  }
  Var out;
  for (std::size_t k = 0; k < channels.size(); ++k) {
    const Var term = ad::row_scale(ad::column(weights, static_cast<Index>(k)), channels[k]);
    out = out.valid() ? ad::add(out, term) : term;
  }
  return out;
}

BaseModel::BaseModel(const ModelInputs& inputs, const ModelConfig& cfg) : Model(inputs), cfg_(cfg) {
  cfg_.validate();
  std::mt19937_64 rng(cfg_.seed);
  const Index r = cfg_.hidden_dim;
  enc1 = nn::Mlp::create(params_, "enc1", inputs.g1.features.cols(), r, r, cfg_.encoder_depth,
                         cfg_.encoder_activation, Activation::linear, rng);
  enc2 = nn::Mlp::create(params_, "enc2", inputs.g2.features.cols(), r, r, cfg_.encoder_depth,
                         cfg_.encoder_activation, Activation::linear, rng);
  if (cfg_.use_cge) {
    sigma1 = params_.add("sigma1", Matrix::Zero(inputs.n1(), 1), false);
    sigma2 = params_.add("sigma2", Matrix::Zero(inputs.n2(), 1), false);
    for (int i = 0; i < cfg_.cge_levels; ++i) {
      cge_factors.push_back(params_.add("cge.factor" + std::to_string(i), nn::glorot(r, r, rng)));
    }
  }
  if (cfg_.use_attention) attention_weight = params_.add("attention.weight", nn::glorot(r, r, rng));
  if (cfg_.use_prior) {
    prior_h_ = inputs.h_train;
    if (cfg_.binarize_prior) prior_h_ = inputs.train_mask;
  }
  const int c = cfg_.enabled_channels();
  fusion = params_.add("fusion", Matrix::Constant(inputs.n1(), c, 1.0 / c), false);
  out_scale = params_.add("output.scale", Matrix::Ones(1, 1), false);
  out_bias = params_.add("output.bias", Matrix::Constant(1, 1, inputs.train_mean), false);
}

std::pair<Var, Var> BaseModel::encode(Tape& tape) {
  const Var f1 = tape.constant(inputs().g1.features);
  const Var f2 = tape.constant(inputs().g2.features);
  return {enc1.forward(tape, params_, f1), enc2.forward(tape, params_, f2)};
}

Var BaseModel::fused_rows(Tape& tape, const std::vector<Index>& rows) {
  const auto [u1, u2] = encode(tape);
  const Activation phi = cfg_.channel_activation;
  std::vector<Var> channels;
  if (cfg_.use_cge) {
    const Var s1 = ad::activation(tape.parameter(params_, sigma1), Activation::sigmoid);
    const Var s2 = ad::activation(tape.parameter(params_, sigma2), Activation::sigmoid);
    std::vector<Var> factors;
    for (std::size_t idx : cge_factors) factors.push_back(tape.parameter(params_, idx));
    channels.push_back(cge_channel(inputs().g1.norm_adjacency, s1, inputs().g2.norm_adjacency, s2,
                                   u1, u2, factors, phi, rows));
  }
  if (cfg_.use_attention) {
    channels.push_back(
        attention_channel(u1, u2, tape.parameter(params_, attention_weight), phi, rows));
  }
  if (cfg_.use_prior) {
    channels.push_back(prior_channel(u1, u2, prior_h_, cfg_.prior_mixing, phi, rows));
  }
  if (cfg_.use_cross) channels.push_back(cross_attention_channel(u1, u2, phi, rows));
  const Var w = ad::select_rows(tape.parameter(params_, fusion), rows);
  return ad::activation(fuse_channels(channels, w), cfg_.fusion_activation);
}

Var BaseModel::forward_rows(Tape& tape, const std::vector<Index>& rows) {
  const Var x = fused_rows(tape, rows);
  if (!cfg_.affine_output) return x;
  return ad::scalar_affine(x, tape.parameter(params_, out_scale), tape.parameter(params_, out_bias));
}

Var BaseModel::batch_loss(Tape& tape, const std::vector<Index>& rows, double normalizer) {
  const Matrix h = inputs().h_train(rows, Eigen::all);
  const Matrix mask = inputs().train_mask(rows, Eigen::all);
  return ad::masked_mse(forward_rows(tape, rows), h, mask, normalizer);
}

}  // namespace symgnn
