#pragma once

// Configuration, shared inputs, and the common interface of both SYMGNN
// instantiations.

#include "symgnn/common.hpp"
#include "symgnn/graph_data.hpp"
#include "symgnn/ops.hpp"
#include "symgnn/tape.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace symgnn {

enum class ModelKind { base, lowrank };

ModelKind parse_model_kind(const std::string& name);
std::string model_kind_name(ModelKind kind);

// How the base model's prior channel mixes H before the activation:
// attention uses within-network softmax Gram matrices, identity passes H.
enum class PriorMixing { attention, identity };

struct ModelConfig {
  ModelKind kind = ModelKind::lowrank;
  Index hidden_dim = 32;
  // Base model: number of CGE aggregation levels l. Low-rank: CGE layers L.
  int cge_levels = 2;
  int encoder_depth = 2;

  bool use_cge = true;
  bool use_attention = true;
  // Base: X3 on binary H only; low-rank: per-class prior branch.
  bool use_prior = true;
  bool use_cross = true;

  ad::Activation encoder_activation = ad::Activation::relu;
  ad::Activation channel_activation = ad::Activation::relu;
  // Applied to the fused base-model output before the rating map.
  ad::Activation fusion_activation = ad::Activation::linear;
  bool affine_output = true;

  // Base model only.
  bool binarize_prior = false;
  PriorMixing prior_mixing = PriorMixing::attention;

  // Low-rank model only: divide each node's class aggregation by its rating
  // count.
  bool normalize_prior = true;

  // Append one-hot node identity columns to both feature matrices.
  bool id_features = false;

  std::uint64_t seed = 1;

  void validate() const;
  int enabled_channels() const;
};

// Defaults for one instantiation. The base model keeps the prior channel off
// since ratings are multi-class.
ModelConfig default_config(ModelKind kind);

// Applies `key = value` settings. Unknown keys raise ConfigError.
void apply_setting(ModelConfig& cfg, const std::string& key, const std::string& value);

// Everything a model reads from the data: normalized graphs, the training
// prior, and derived per-class indicators.
struct ModelInputs {
  NormalizedNetwork g1;
  NormalizedNetwork g2;
  Matrix h_train;
  Matrix train_mask;
  std::vector<double> classes;
  double train_mean = 0.0;
  Index train_count = 0;

  // Per class c: users x items indicator of training ratings equal to
  // classes[c] (row-normalized when configured), and the items x users
  // counterpart. Filled only for the low-rank model.
  std::vector<SparseMatrix> user_class_prior;
  std::vector<SparseMatrix> item_class_prior;

  // Training entries grouped by user row.
  std::vector<std::vector<Index>> train_cols_by_row;
  std::vector<std::vector<double>> train_values_by_row;

  Index n1() const { return g1.size(); }
  Index n2() const { return g2.size(); }
};

ModelInputs make_model_inputs(const Dataset& data, const Matrix& train_mask, const ModelConfig& cfg);

// Unnormalized indicator of `mask` entries whose rating equals classes[c],
// one matrix per class. Ratings outside `classes` raise ValidationError.
std::vector<SparseMatrix> class_indicators(const Matrix& h, const Matrix& mask,
                                           const std::vector<double>& classes);

// Divides each row by its count of nonzeros summed across all matrices.
void normalize_rows_jointly(std::vector<SparseMatrix>& mats);

std::vector<Index> all_rows(Index n);

class Model {
 public:
  virtual ~Model() = default;

  virtual const ModelConfig& config() const = 0;
  virtual ad::ParameterSet& params() = 0;
  virtual const ad::ParameterSet& params() const = 0;

  // Predictions (before clipping) for the given user rows against all items.
  virtual ad::Var forward_rows(ad::Tape& tape, const std::vector<Index>& rows) = 0;

  // Squared error over the training entries of `rows`, divided by
  // `normalizer`. Summing this over a partition of the rows gives the
  // full-batch loss.
  virtual ad::Var batch_loss(ad::Tape& tape, const std::vector<Index>& rows,
                             double normalizer) = 0;

  // Unclipped predictions for every user/item pair, computed in row chunks.
  virtual Matrix predict_raw(Index row_chunk = 128);
  // predict_raw clipped to the class range.
  Matrix predict(Index row_chunk = 128);

 protected:
  explicit Model(const ModelInputs& inputs) : inputs_(&inputs) {}
  const ModelInputs& inputs() const { return *inputs_; }

 private:
  const ModelInputs* inputs_;
};

std::unique_ptr<Model> make_model(const ModelInputs& inputs, const ModelConfig& cfg);

}  // namespace symgnn
