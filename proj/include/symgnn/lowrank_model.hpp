#pragma once

// Low-rank instantiation: per-network embedding pipelines whose row dot
// products give the predictions.

#include "symgnn/layers.hpp"
#include "symgnn/model.hpp"

#include <vector>

namespace symgnn {

// L layers of U <- phi((diag(s) + (I - diag(s)) A) U W_l); no biases.
ad::Var cge_embed(const SparseMatrix& norm_adj, ad::Var sigma, ad::Var u0,
                  const std::vector<ad::Var>& weights, ad::Activation phi);

// phi(B U W) with B = row_softmax_gram(U, U).
ad::Var attention_embed(ad::Var u, ad::Var w, ad::Activation phi);

// V_c = phi(P_c U_other Theta_c) per class, then [V_1 | ... | V_K] W + b.
ad::Var class_prior_embed(const std::vector<SparseMatrix>& class_prior, ad::Var u_other,
                          const std::vector<ad::Var>& thetas, ad::Var concat_weight,
                          ad::Var concat_bias, ad::Activation phi);

// phi(C U_other Theta) with C = row_softmax_gram(U_self, U_other).
ad::Var cross_attention_embed(ad::Var u_self, ad::Var u_other, ad::Var theta, ad::Activation phi);

class LowRankModel final : public Model {
 public:
  LowRankModel(const ModelInputs& inputs, const ModelConfig& cfg);

  const ModelConfig& config() const override { return cfg_; }
  ad::ParameterSet& params() override { return params_; }
  const ad::ParameterSet& params() const override { return params_; }

  // Final embeddings U1 (n1 x r) and U2 (n2 x r).
  std::pair<ad::Var, ad::Var> embed(ad::Tape& tape);

  ad::Var forward_rows(ad::Tape& tape, const std::vector<Index>& rows) override;
  ad::Var forward_entries(ad::Tape& tape, const std::vector<Index>& rows,
                          const std::vector<Index>& cols);
  ad::Var batch_loss(ad::Tape& tape, const std::vector<Index>& rows, double normalizer) override;
  // Embeds once and scores every pair.
  Matrix predict_raw(Index row_chunk = 128) override;

  // Parameters of one side's pipeline.
  struct Side {
    nn::Mlp encoder;
    std::size_t sigma = 0;
    std::vector<std::size_t> cge_weights;
    std::size_t attention_weight = 0;
    std::vector<std::size_t> prior_thetas;
    nn::Linear prior_concat;
    std::size_t cross_theta = 0;
  };
  Side side1, side2;
  std::size_t out_scale = 0, out_bias = 0;

 private:
  ad::Var side_embed(ad::Tape& tape, const Side& side, const NormalizedNetwork& net,
                     const std::vector<SparseMatrix>& class_prior, ad::Var u_self, ad::Var u_other);
  ad::Var apply_output(ad::Tape& tape, ad::Var x);

  ModelConfig cfg_;
  ad::ParameterSet params_;
};

}  // namespace symgnn
