#include "symgnn/lowrank_model.hpp"

#include <random>
#include <string>

namespace symgnn {

using ad::Activation;
using ad::Tape;
using ad::Var;

Var cge_embed(const SparseMatrix& norm_adj, Var sigma, Var u0, const std::vector<Var>& weights,
              Activation phi) {
  Var u = u0;
  for (const Var& w : weights) {
    u = ad::activation(nn::cge_propagate(norm_adj, sigma, ad::matmul(u, w)), phi);
  }
  return u;
}

Var attention_embed(Var u, Var w, Activation phi) {
  return ad::activation(ad::matmul(ad::matmul(ad::row_softmax_gram(u, u), u), w), phi);
}

Var class_prior_embed(const std::vector<SparseMatrix>& class_prior, Var u_other,
                      const std::vector<Var>& thetas, Var concat_weight, Var concat_bias,
                      Activation phi) {
  if (class_prior.size() != thetas.size()) {
    throw ShapeError("class_prior_embed: " + std::to_string(class_prior.size()) +
                     " class matrices but " + std::to_string(thetas.size()) + " weights");
  }
  std::vector<Var> parts;
  parts.reserve(thetas.size());
  for (std::size_t c = 0; c < thetas.size(); ++c) {
    if (class_prior[c].cols() != u_other.rows()) {
      throw ShapeError("class_prior_embed: class matrix " + shape_str(class_prior[c]) +
                       " against embeddings " + shape_str(u_other.value()));
    }
    parts.push_back(ad::activation(ad::matmul(ad::spmm(class_prior[c], u_other), thetas[c]), phi));
  }
  return ad::add_row_bias(ad::matmul(ad::concat_cols(parts), concat_weight), concat_bias);
}

Var cross_attention_embed(Var u_self, Var u_other, Var theta, Activation phi) {
  const Var c = ad::row_softmax_gram(u_self, u_other);
  return ad::activation(ad::matmul(ad::matmul(c, u_other), theta), phi);
}

namespace {

LowRankModel::Side make_side(ad::ParameterSet& params, const std::string& tag, Index feature_dim,
                             Index n, const ModelConfig& cfg, std::size_t classes,
                             std::mt19937_64& rng) {
  const Index r = cfg.hidden_dim;
  LowRankModel::Side s;
  s.encoder = nn::Mlp::create(params, tag + ".enc", feature_dim, r, r, cfg.encoder_depth,
                              cfg.encoder_activation, Activation::linear, rng);
  if (cfg.use_cge) {
    s.sigma = params.add(tag + ".sigma", Matrix::Zero(n, 1), false);
    for (int l = 0; l < cfg.cge_levels; ++l) {
      s.cge_weights.push_back(params.add(tag + ".cge" + std::to_string(l), nn::glorot(r, r, rng)));
    }
  }
  if (cfg.use_attention) s.attention_weight = params.add(tag + ".attention", nn::glorot(r, r, rng));
  if (cfg.use_prior) {
    for (std::size_t c = 0; c < classes; ++c) {
      s.prior_thetas.push_back(
          params.add(tag + ".prior" + std::to_string(c), nn::glorot(r, r, rng)));
    }
    s.prior_concat = nn::Linear::create(params, tag + ".prior_concat",
                                        static_cast<Index>(classes) * r, r, rng);
  }
  if (cfg.use_cross) s.cross_theta = params.add(tag + ".cross", nn::glorot(r, r, rng));
  return s;
}

}  // namespace

LowRankModel::LowRankModel(const ModelInputs& inputs, const ModelConfig& cfg)
    : Model(inputs), cfg_(cfg) {
  cfg_.validate();
  if (cfg_.use_prior && (inputs.user_class_prior.size() != inputs.classes.size() ||
                         inputs.item_class_prior.size() != inputs.classes.size())) {
    throw ConfigError("low-rank prior branch needs per-class prior matrices");
  }
  std::mt19937_64 rng(cfg_.seed);
  side1 = make_side(params_, "user", inputs.g1.features.cols(), inputs.n1(), cfg_,
                    inputs.classes.size(), rng);
  side2 = make_side(params_, "item", inputs.g2.features.cols(), inputs.n2(), cfg_,
                    inputs.classes.size(), rng);
  out_scale = params_.add("output.scale", Matrix::Ones(1, 1), false);
  out_bias = params_.add("output.bias", Matrix::Constant(1, 1, inputs.train_mean), false);
}

Var LowRankModel::side_embed(Tape& tape, const Side& side, const NormalizedNetwork& net,
                             const std::vector<SparseMatrix>& class_prior, Var u_self,
                             Var u_other) {
  const Activation phi = cfg_.channel_activation;
  Var u = u_self;
  if (cfg_.use_cge) {
    const Var sigma = ad::activation(tape.parameter(params_, side.sigma), Activation::sigmoid);
    std::vector<Var> ws;
    for (std::size_t idx : side.cge_weights) ws.push_back(tape.parameter(params_, idx));
    u = ad::add(u, cge_embed(net.norm_adjacency, sigma, u_self, ws, phi));
  }
  if (cfg_.use_attention) {
    u = ad::add(u, attention_embed(u_self, tape.parameter(params_, side.attention_weight), phi));
  }
  if (cfg_.use_prior) {
    std::vector<Var> thetas;
    for (std::size_t idx : side.prior_thetas) thetas.push_back(tape.parameter(params_, idx));
    u = ad::add(u, class_prior_embed(class_prior, u_other, thetas,
                                     tape.parameter(params_, side.prior_concat.weight),
                                     tape.parameter(params_, side.prior_concat.bias), phi));
  }
  if (cfg_.use_cross) {
    u = ad::add(u, cross_attention_embed(u_self, u_other,
                                         tape.parameter(params_, side.cross_theta), phi));
  }
  return u;
}

std::pair<Var, Var> LowRankModel::embed(Tape& tape) {
  const Var h1 = side1.encoder.forward(tape, params_, tape.constant(inputs().g1.features));
  const Var h2 = side2.encoder.forward(tape, params_, tape.constant(inputs().g2.features));
  const Var u1 = side_embed(tape, side1, inputs().g1, inputs().user_class_prior, h1, h2);
  const Var u2 = side_embed(tape, side2, inputs().g2, inputs().item_class_prior, h2, h1);
  return {u1, u2};
}

Var LowRankModel::apply_output(Tape& tape, Var x) {
  if (!cfg_.affine_output) return x;
  return ad::scalar_affine(x, tape.parameter(params_, out_scale), tape.parameter(params_, out_bias));
}

Var LowRankModel::forward_rows(Tape& tape, const std::vector<Index>& rows) {
  const auto [u1, u2] = embed(tape);
  return apply_output(tape, ad::matmul(ad::select_rows(u1, rows), ad::transpose(u2)));
}

Matrix LowRankModel::predict_raw(Index /*row_chunk*/) {
  Tape tape;
  const auto [u1, u2] = embed(tape);
  return apply_output(tape, ad::matmul(u1, ad::transpose(u2))).value();
}

Var LowRankModel::forward_entries(Tape& tape, const std::vector<Index>& rows,
                                  const std::vector<Index>& cols) {
  const auto [u1, u2] = embed(tape);
  return apply_output(tape, ad::pair_dot(u1, u2, rows, cols));
}

Var LowRankModel::batch_loss(Tape& tape, const std::vector<Index>& rows, double normalizer) {
  std::vector<Index> er;
  std::vector<Index> ec;
  std::vector<double> ev;
  for (Index i : rows) {
    const auto& cols = inputs().train_cols_by_row.at(static_cast<std::size_t>(i));
    const auto& vals = inputs().train_values_by_row.at(static_cast<std::size_t>(i));
    for (std::size_t k = 0; k < cols.size(); ++k) {
      er.push_back(i);
      ec.push_back(cols[k]);
      ev.push_back(vals[k]);
    }
  }
  const Vector target = Eigen::Map<const Vector>(ev.data(), static_cast<Index>(ev.size()));
  return ad::entry_mse(forward_entries(tape, er, ec), target, normalizer);
}

}  // namespace symgnn
