#include "symgnn/model.hpp"

#include "symgnn/base_model.hpp"
#include "symgnn/lowrank_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace symgnn {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ConfigError("expected a boolean for '" + key + "', got '" + v + "'");
}

long parse_int(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  long out = 0;
  try {
    out = std::stol(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != v.size()) {
    throw ConfigError("expected an integer for '" + key + "', got '" + v + "'");
  }
  return out;
}

ad::Activation parse_act(const std::string& key, const std::string& v) {
  try {
    return ad::parse_activation(v);
  } catch (const Error& e) {
    throw ConfigError("bad activation for '" + key + "': " + e.what());
  }
}

}  // namespace

ModelKind parse_model_kind(const std::string& name) {
  if (name == "base") return ModelKind::base;
  if (name == "lowrank" || name == "low-rank") return ModelKind::lowrank;
  throw ConfigError("unknown model '" + name + "' (expected base or lowrank)");
}

std::string model_kind_name(ModelKind kind) {
  return kind == ModelKind::base ? "base" : "lowrank";
}

void ModelConfig::validate() const {
  if (hidden_dim < 1) throw ConfigError("hidden_dim must be at least 1");
  if (cge_levels < 1) throw ConfigError("cge_levels must be at least 1");
  if (encoder_depth < 1) throw ConfigError("encoder_depth must be at least 1");
  if (kind == ModelKind::base && enabled_channels() == 0) {
    throw ConfigError("at least one channel must be enabled");
  }
}

int ModelConfig::enabled_channels() const {
  return int(use_cge) + int(use_attention) + int(use_prior) + int(use_cross);
}

ModelConfig default_config(ModelKind kind) {
  ModelConfig cfg;
  cfg.kind = kind;
  if (kind == ModelKind::base) {
    cfg.use_prior = false;
    cfg.cge_levels = 2;
  }
  return cfg;
}

void apply_setting(ModelConfig& cfg, const std::string& raw_key, const std::string& raw_value) {
  const std::string key = trim(raw_key);
  const std::string v = trim(raw_value);
  if (key == "model") {
    cfg.kind = parse_model_kind(v);
  } else if (key == "hidden_dim") {
    cfg.hidden_dim = parse_int(key, v);
  } else if (key == "cge_levels" || key == "cge_layers") {
    cfg.cge_levels = static_cast<int>(parse_int(key, v));
  } else if (key == "encoder_depth") {
    cfg.encoder_depth = static_cast<int>(parse_int(key, v));
  } else if (key == "channels") {
    cfg.use_cge = cfg.use_attention = cfg.use_prior = cfg.use_cross = false;
    for (const auto& c : split_list(v)) {
      if (c == "cge") {
        cfg.use_cge = true;
      } else if (c == "attention") {
        cfg.use_attention = true;
      } else if (c == "prior") {
        cfg.use_prior = true;
      } else if (c == "cross") {
        cfg.use_cross = true;
      } else if (c == "none") {
      } else {
        throw ConfigError("unknown channel '" + c + "' (cge, attention, prior, cross)");
      }
    }
  } else if (key == "activations") {
    const auto parts = split_list(v);
    if (parts.empty() || parts.size() > 3) {
      throw ConfigError("activations takes 1 to 3 names: encoder[,channel[,fusion]]");
    }
    cfg.encoder_activation = parse_act(key, parts[0]);
    if (parts.size() > 1) cfg.channel_activation = parse_act(key, parts[1]);
    if (parts.size() > 2) cfg.fusion_activation = parse_act(key, parts[2]);
  } else if (key == "activation.encoder") {
    cfg.encoder_activation = parse_act(key, v);
  } else if (key == "activation.channel") {
    cfg.channel_activation = parse_act(key, v);
  } else if (key == "activation.fusion") {
    cfg.fusion_activation = parse_act(key, v);
  } else if (key == "output_map") {
    if (v == "affine") {
      cfg.affine_output = true;
    } else if (v == "identity") {
      cfg.affine_output = false;
    } else {
      throw ConfigError("output_map must be affine or identity");
    }
  } else if (key == "binarize_prior") {
    cfg.binarize_prior = parse_bool(key, v);
  } else if (key == "prior_mixing") {
    if (v == "attention") {
      cfg.prior_mixing = PriorMixing::attention;
    } else if (v == "identity") {
      cfg.prior_mixing = PriorMixing::identity;
    } else {
      throw ConfigError("prior_mixing must be attention or identity");
    }
  } else if (key == "normalize_prior") {
    cfg.normalize_prior = parse_bool(key, v);
  } else if (key == "id_features") {
    cfg.id_features = parse_bool(key, v);
  } else if (key == "seed") {
    cfg.seed = static_cast<std::uint64_t>(parse_int(key, v));
  } else {
    throw ConfigError("unknown model setting '" + key + "'");
  }
}

std::vector<SparseMatrix> class_indicators(const Matrix& h, const Matrix& mask,
                                           const std::vector<double>& classes) {
  if (h.rows() != mask.rows() || h.cols() != mask.cols()) {
    throw ShapeError("class_indicators: H " + shape_str(h) + " vs mask " + shape_str(mask));
  }
  using Triplet = Eigen::Triplet<double>;
  std::vector<std::vector<Triplet>> trips(classes.size());
  for (Index i = 0; i < h.rows(); ++i) {
    for (Index j = 0; j < h.cols(); ++j) {
      if (mask(i, j) == 0.0) continue;
      const auto it = std::find(classes.begin(), classes.end(), h(i, j));
      if (it == classes.end()) {
        throw ValidationError("rating " + std::to_string(h(i, j)) + " at (" + std::to_string(i) +
                              ", " + std::to_string(j) + ") is not a declared class");
      }
      trips[static_cast<std::size_t>(it - classes.begin())].emplace_back(i, j, 1.0);
    }
  }
  std::vector<SparseMatrix> out;
  for (const auto& t : trips) {
    SparseMatrix m(h.rows(), h.cols());
    m.setFromTriplets(t.begin(), t.end());
    out.push_back(std::move(m));
  }
  return out;
}

void normalize_rows_jointly(std::vector<SparseMatrix>& mats) {
  if (mats.empty()) return;
  Vector count = Vector::Zero(mats.front().rows());
  for (const auto& m : mats) {
    for (Index i = 0; i < m.outerSize(); ++i) count(i) += static_cast<double>(m.row(i).nonZeros());
  }
  for (auto& m : mats) {
    for (Index i = 0; i < m.outerSize(); ++i) {
      if (count(i) == 0.0) continue;
      for (SparseMatrix::InnerIterator it(m, i); it; ++it) it.valueRef() /= count(i);
    }
  }
}

std::vector<Index> all_rows(Index n) {
  std::vector<Index> rows(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) rows[static_cast<std::size_t>(i)] = i;
  return rows;
}

ModelInputs make_model_inputs(const Dataset& data, const Matrix& train_mask,
                              const ModelConfig& cfg) {
  data.prior.validate();
  if (train_mask.rows() != data.prior.rows() || train_mask.cols() != data.prior.cols()) {
    throw ShapeError("train mask " + shape_str(train_mask) + " for prior " +
                     shape_str(data.prior.h));
  }
  ModelInputs in;
  in.g1 = symmetric_normalize(data.users);
  in.g2 = symmetric_normalize(data.items);
  if (cfg.id_features) {
    const auto append_id = [](Matrix& f) {
      const Index n = f.rows();
      Matrix out = Matrix::Zero(n, f.cols() + n);
      out.leftCols(f.cols()) = f;
      out.rightCols(n).setIdentity();
      f = std::move(out);
    };
    append_id(in.g1.features);
    append_id(in.g2.features);
  }
  in.train_mask = train_mask;
  in.h_train = data.prior.h.cwiseProduct(train_mask);
  in.classes = data.prior.classes;
  in.train_count = static_cast<Index>(train_mask.sum());
  if (in.train_count == 0) throw ValidationError("training mask selects no observations");
  in.train_mean = in.h_train.sum() / static_cast<double>(in.train_count);

  in.train_cols_by_row.resize(static_cast<std::size_t>(in.n1()));
  in.train_values_by_row.resize(static_cast<std::size_t>(in.n1()));
  for (Index i = 0; i < in.n1(); ++i) {
    for (Index j = 0; j < in.n2(); ++j) {
      if (train_mask(i, j) == 0.0) continue;
      in.train_cols_by_row[static_cast<std::size_t>(i)].push_back(j);
      in.train_values_by_row[static_cast<std::size_t>(i)].push_back(in.h_train(i, j));
    }
  }

  if (cfg.kind == ModelKind::lowrank && cfg.use_prior) {
    in.user_class_prior = class_indicators(in.h_train, train_mask, in.classes);
    for (const auto& m : in.user_class_prior) in.item_class_prior.emplace_back(m.transpose());
    if (cfg.normalize_prior) {
      normalize_rows_jointly(in.user_class_prior);
      normalize_rows_jointly(in.item_class_prior);
    }
  }
  return in;
}

Matrix Model::predict_raw(Index row_chunk) {
  const ModelInputs& in = inputs();
  Matrix out(in.n1(), in.n2());
  row_chunk = std::max<Index>(row_chunk, 1);
  for (Index start = 0; start < in.n1(); start += row_chunk) {
    const Index stop = std::min(in.n1(), start + row_chunk);
    std::vector<Index> rows;
    for (Index i = start; i < stop; ++i) rows.push_back(i);
    ad::Tape tape;
    out.middleRows(start, stop - start) = forward_rows(tape, rows).value();
  }
  return out;
}

Matrix Model::predict(Index row_chunk) {
  const ModelInputs& in = inputs();
  const Matrix out = predict_raw(row_chunk);
  const double lo = in.classes.front();
  const double hi = in.classes.back();
  return out.cwiseMax(lo).cwiseMin(hi);
}

std::unique_ptr<Model> make_model(const ModelInputs& inputs, const ModelConfig& cfg) {
  if (cfg.kind == ModelKind::base) return std::make_unique<BaseModel>(inputs, cfg);
  return std::make_unique<LowRankModel>(inputs, cfg);
}

}  // namespace symgnn
