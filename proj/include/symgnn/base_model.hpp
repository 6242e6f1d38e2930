#pragma once

// Base instantiation: up to four n1 x n2 association channels fused by a
// per-row linear layer.

#include "symgnn/layers.hpp"
#include "symgnn/model.hpp"

#include <vector>

namespace symgnn {

// Channel functions. Each returns the rows `rows` of its n1 x n2 channel.
// Sigma arguments are already squashed into (0, 1).

// sum_{i=1..l} phi(A1^i U1 W'_i W'_i^T U2^T (A2^i)^T), A = cge adjacency.
ad::Var cge_channel(const SparseMatrix& a1, ad::Var sigma1, const SparseMatrix& a2, ad::Var sigma2,
                    ad::Var u1, ad::Var u2, const std::vector<ad::Var>& factors,
                    ad::Activation phi, const std::vector<Index>& rows);

// phi(B1 U1 W U2^T B2^T) with B = row_softmax_gram(U, U).
ad::Var attention_channel(ad::Var u1, ad::Var u2, ad::Var w, ad::Activation phi,
                          const std::vector<Index>& rows);

// phi(P1 H P2^T); P = row_softmax_gram(U, U) for attention mixing, I for
// identity mixing. H must be binary.
ad::Var prior_channel(ad::Var u1, ad::Var u2, const Matrix& h, PriorMixing mixing,
                      ad::Activation phi, const std::vector<Index>& rows);

// phi((n2 * C) .* (U1 U2^T)) with C = row_softmax_gram(U1, U2).
ad::Var cross_attention_channel(ad::Var u1, ad::Var u2, ad::Activation phi,
                                const std::vector<Index>& rows);

// out(i, :) = sum_k channels[k](i, :) * weights(i, k). weights is b x c.
ad::Var fuse_channels(const std::vector<ad::Var>& channels, ad::Var weights);

class BaseModel final : public Model {
 public:
  BaseModel(const ModelInputs& inputs, const ModelConfig& cfg);

  const ModelConfig& config() const override { return cfg_; }
  ad::ParameterSet& params() override { return params_; }
  const ad::ParameterSet& params() const override { return params_; }

  ad::Var forward_rows(ad::Tape& tape, const std::vector<Index>& rows) override;
  ad::Var batch_loss(ad::Tape& tape, const std::vector<Index>& rows, double normalizer) override;

  // Fused output before the rating map.
  ad::Var fused_rows(ad::Tape& tape, const std::vector<Index>& rows);
  std::pair<ad::Var, ad::Var> encode(ad::Tape& tape);

  // Parameter indices, exposed so tests can pin values.
  nn::Mlp enc1, enc2;
  std::size_t sigma1 = 0, sigma2 = 0;
  std::vector<std::size_t> cge_factors;
  std::size_t attention_weight = 0;
  std::size_t fusion = 0;
  std::size_t out_scale = 0, out_bias = 0;

 private:
  ModelConfig cfg_;
  ad::ParameterSet params_;
  Matrix prior_h_;
};

}  // namespace symgnn
