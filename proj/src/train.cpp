#include "symgnn/train.hpp"

#include "symgnn/adam.hpp"
#include "symgnn/checkpoint.hpp"

#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace symgnn {

namespace {

using Clock = std::chrono::steady_clock;
using json = nlohmann::json;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != v.size()) {
    throw ConfigError("expected a number for '" + key + "', got '" + v + "'");
  }
  return out;
}

long to_long(const std::string& key, const std::string& v) {
  const double d = to_double(key, v);
  if (d != std::floor(d)) throw ConfigError("expected an integer for '" + key + "'");
  return static_cast<long>(d);
}

void emit(std::ostream* log, const json& record) {
  if (log != nullptr) *log << record.dump() << '\n' << std::flush;
}

}  // namespace

std::filesystem::path resolve_data_root(const std::filesystem::path& explicit_root) {
  if (!explicit_root.empty()) return explicit_root;
  if (const char* env = std::getenv(kDataRootEnv); env != nullptr && *env != '\0') return env;
  return "data";
}

DataBundle load_bundle(const DataOptions& opts) {
  DataBundle b;
  if (opts.name == "toy") {
    b.data = make_toy();
    b.split.train_mask = b.data.prior.mask;
    b.split.val_mask = b.data.prior.mask;
    b.split.test_mask = b.data.prior.mask;
    return b;
  }
  if (opts.name == "synthetic") {
    b.data = make_synthetic(opts.synthetic);
  } else {
    std::filesystem::path dir = opts.name;
    if (opts.name == "ml-100k" || !std::filesystem::exists(dir)) {
      dir = resolve_data_root(opts.root) / opts.name;
    }
    if (!std::filesystem::is_directory(dir)) {
      throw ValidationError("dataset directory not found: " + dir.string() + " (set " +
                            kDataRootEnv + " or pass --data-root)");
    }
    MovieLensOptions ml;
    ml.user_k = opts.knn_k;
    ml.item_k = opts.knn_k;
    ml.metric = opts.metric;
    b.data = load_movielens_100k(dir, ml);
  }
  if (!opts.test_pairs.empty()) {
    std::ifstream in(opts.test_pairs);
    if (!in) throw ValidationError("cannot open split file " + opts.test_pairs.string());
    b.split = split_from_test_pairs(b.data.prior, in, opts.val_fraction, opts.split_seed);
  } else {
    SplitFractions fr;
    fr.test = opts.test_fraction;
    fr.val = (1.0 - opts.test_fraction) * opts.val_fraction;
    fr.train = 1.0 - fr.test - fr.val;
    b.split = split_ratings(b.data.prior, fr, opts.split_seed);
  }
  b.split.validate(b.data.prior);
  return b;
}

void TrainConfig::validate() const {
  if (epochs < 0) throw ConfigError("epochs must be nonnegative");
  if (batch_rows < 1) throw ConfigError("batch_rows must be at least 1");
  if (!(lr >= 0.0)) throw ConfigError("lr must be nonnegative");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be nonnegative");
  if (patience < 1) throw ConfigError("patience must be at least 1");
  if (eval_every < 1) throw ConfigError("eval_every must be at least 1");
}

bool apply_train_setting(TrainConfig& cfg, const std::string& raw_key, const std::string& raw_v) {
  const std::string key = trim(raw_key);
  const std::string v = trim(raw_v);
  if (key == "epochs") {
    cfg.epochs = static_cast<int>(to_long(key, v));
  } else if (key == "batch_rows") {
    cfg.batch_rows = to_long(key, v);
  } else if (key == "lr") {
    cfg.lr = to_double(key, v);
  } else if (key == "weight_decay") {
    cfg.weight_decay = to_double(key, v);
  } else if (key == "seed") {
    cfg.seed = static_cast<std::uint64_t>(to_long(key, v));
  } else if (key == "patience") {
    cfg.patience = static_cast<int>(to_long(key, v));
  } else if (key == "eval_every") {
    cfg.eval_every = static_cast<int>(to_long(key, v));
  } else {
    return false;
  }
  return true;
}

ConfigFile read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  ConfigFile f;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    }
    f.entries.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return f;
}

void apply_config(const ConfigFile& file, DataOptions* data, TrainConfig* train,
                  ModelConfig* model) {
  for (const auto& [key, value] : file.entries) {
    if (data != nullptr) {
      if (key == "data") {
        data->name = value;
        continue;
      }
      if (key == "knn_k" || key == "k") {
        data->knn_k = static_cast<int>(to_long(key, value));
        continue;
      }
      if (key == "metric") {
        data->metric = parse_metric(value);
        continue;
      }
      if (key == "split_seed") {
        data->split_seed = static_cast<std::uint64_t>(to_long(key, value));
        continue;
      }
      if (key == "test_fraction") {
        data->test_fraction = to_double(key, value);
        continue;
      }
      if (key == "val_fraction") {
        data->val_fraction = to_double(key, value);
        continue;
      }
    }
    bool used = false;
    if (train != nullptr) used = apply_train_setting(*train, key, value);
    if (model != nullptr && (!used || key == "seed")) {
      apply_setting(*model, key, value);
      used = true;
    }
    if (!used) throw ConfigError("unknown config key '" + key + "'");
  }
}

double evaluate_rmse(const Matrix& predictions, const Matrix& h, const Matrix& mask) {
  if (predictions.rows() != h.rows() || predictions.cols() != h.cols() ||
      mask.rows() != h.rows() || mask.cols() != h.cols()) {
    throw ShapeError("evaluate_rmse: predictions " + shape_str(predictions) + ", truth " +
                     shape_str(h) + ", mask " + shape_str(mask));
  }
  const double count = mask.sum();
  if (count <= 0.0) throw ValidationError("evaluate_rmse: empty evaluation mask");
  return std::sqrt((predictions - h).cwiseProduct(mask).squaredNorm() / count);
}

double train_mean_rmse(const DataBundle& bundle) {
  const Matrix& h = bundle.data.prior.h;
  const double mean = h.cwiseProduct(bundle.split.train_mask).sum() / bundle.split.train_mask.sum();
  return evaluate_rmse(Matrix::Constant(h.rows(), h.cols(), mean), h, bundle.split.test_mask);
}

std::vector<std::vector<Index>> make_batches(Index rows, Index batch_rows, std::uint64_t seed,
                                             int epoch) {
  std::vector<Index> order = all_rows(rows);
  std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(epoch));
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<Index>> out;
  for (Index start = 0; start < rows; start += batch_rows) {
    const Index stop = std::min(rows, start + batch_rows);
    out.emplace_back(order.begin() + start, order.begin() + stop);
    std::sort(out.back().begin(), out.back().end());
  }
  return out;
}

double epoch_loss(Model& model, const std::vector<std::vector<Index>>& batches,
                  double normalizer) {
  long double total = 0.0L;
  for (const auto& rows : batches) {
    ad::Tape tape;
    total += model.batch_loss(tape, rows, normalizer).item();
  }
  return static_cast<double>(total);
}

RunReport train(Model& model, const DataBundle& bundle, const TrainConfig& cfg,
                std::ostream* log) {
  cfg.validate();
  const auto t0 = Clock::now();
  const Matrix& h = bundle.data.prior.h;
  const RatingSplit& split = bundle.split;
  const double normalizer = split.train_mask.sum();
  if (normalizer <= 0.0) throw ValidationError("training split is empty");

  RunReport rep;
  rep.model = model_kind_name(model.config().kind);
  rep.seed = cfg.seed;
  rep.param_count = model.params().element_count();

  ad::ParameterSet& params = model.params();
  ad::AdamOptions opts;
  opts.lr = cfg.lr;
  opts.weight_decay = cfg.weight_decay;
  ad::AdamState adam(opts);

  const auto snapshot = [&params]() {
    std::vector<Matrix> v;
    for (const auto& p : params) v.push_back(p.value);
    return v;
  };

  rep.init_val_rmse = evaluate_rmse(model.predict(), h, split.val_mask);
  rep.best_val_rmse = rep.init_val_rmse;
  std::vector<Matrix> best = snapshot();
  emit(log, {{"event", "init"}, {"model", rep.model}, {"seed", cfg.seed},
             {"params", rep.param_count}, {"val_rmse", rep.init_val_rmse}});

  const Index n1 = h.rows();
  int since_best = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto te = Clock::now();
    long double total = 0.0L;
    const auto batches = make_batches(n1, cfg.batch_rows, cfg.seed, epoch);
    for (std::size_t b = 0; b < batches.size(); ++b) {
      ad::Tape tape;
      params.zero_grad();
      const ad::Var loss = model.batch_loss(tape, batches[b], normalizer);
      const double value = loss.item();
      if (!std::isfinite(value)) {
        std::string where = "loss became " + std::to_string(value) + " at epoch " +
                            std::to_string(epoch) + ", batch " + std::to_string(b);
        if (!cfg.divergence_snapshot.empty()) {
          ad::save_parameters(cfg.divergence_snapshot, params);
          where += "; parameters saved to " + cfg.divergence_snapshot.string();
        }
        emit(log, {{"event", "diverged"}, {"epoch", epoch}, {"batch", b}});
        throw TrainingDiverged(where);
      }
      total += value;
      tape.backward(loss);
      const ad::TapeStats st = tape.stats();
      rep.peak_activation_elems = std::max(rep.peak_activation_elems, st.activation_elements);
      rep.peak_activation_min_dim = std::max(rep.peak_activation_min_dim, st.largest_min_dim);
      adam.step(params);
    }
    rep.epochs_run = epoch;

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = static_cast<double>(total);
    const bool eval_now = epoch % cfg.eval_every == 0 || epoch == cfg.epochs;
    if (eval_now) {
      rec.val_rmse = evaluate_rmse(model.predict(), h, split.val_mask);
      if (rec.val_rmse < rep.best_val_rmse) {
        rep.best_val_rmse = rec.val_rmse;
        rep.best_epoch = epoch;
        best = snapshot();
        since_best = 0;
      } else {
        since_best += cfg.eval_every;
      }
    } else {
      rec.val_rmse = std::nan("");
    }
    rec.best_val_rmse = rep.best_val_rmse;
    rec.seconds = seconds_since(te);
    rep.history.push_back(rec);
    json line = {{"event", "epoch"},     {"epoch", epoch},
                 {"train_loss", rec.train_loss}, {"best_val_rmse", rec.best_val_rmse},
                 {"seconds", rec.seconds}};
    if (eval_now) line["val_rmse"] = rec.val_rmse;
    emit(log, line);
    if (since_best >= cfg.patience) break;
  }

  std::size_t k = 0;
  for (auto& p : params) p.value = best[k++];
  rep.test_rmse = evaluate_rmse(model.predict(), h, split.test_mask);
  rep.wall_seconds = seconds_since(t0);
  json done = json::parse(report_json(rep));
  done["event"] = "report";
  emit(log, done);
  return rep;
}

RunReport train_fresh(const DataBundle& bundle, ModelConfig model_cfg, const TrainConfig& cfg,
                      std::ostream* log, const std::filesystem::path& checkpoint) {
  model_cfg.seed = cfg.seed;
  const ModelInputs inputs = make_model_inputs(bundle.data, bundle.split.train_mask, model_cfg);
  const auto model = make_model(inputs, model_cfg);
  RunReport rep = train(*model, bundle, cfg, log);
  if (!checkpoint.empty()) ad::save_parameters(checkpoint, model->params());
  return rep;
}

RepeatSummary train_repeats(const DataBundle& bundle, const ModelConfig& model_cfg,
                            const TrainConfig& cfg, int repeats, std::ostream* log) {
  if (repeats < 1) throw ConfigError("repeats must be at least 1");
  RepeatSummary s;
  for (int r = 0; r < repeats; ++r) {
    TrainConfig c = cfg;
    c.seed = cfg.seed + static_cast<std::uint64_t>(r);
    s.runs.push_back(train_fresh(bundle, model_cfg, c, log));
  }
  double sum = 0.0;
  for (const auto& run : s.runs) sum += run.test_rmse;
  s.mean_test_rmse = sum / repeats;
  double var = 0.0;
  for (const auto& run : s.runs) var += std::pow(run.test_rmse - s.mean_test_rmse, 2);
  s.std_test_rmse = repeats > 1 ? std::sqrt(var / (repeats - 1)) : 0.0;
  return s;
}

ModelConfig ablation_variant(const ModelConfig& full, const std::string& variant) {
  ModelConfig cfg = full;
  if (variant == "full") return cfg;
  if (variant == "G") {
    cfg.use_attention = false;
    cfg.use_cross = false;
    cfg.use_cge = true;
  } else if (variant == "A") {
    cfg.use_cge = false;
    cfg.use_attention = true;
    cfg.use_cross = true;
  } else {
    throw ConfigError("unknown ablation variant '" + variant + "' (full, G, A)");
  }
  return cfg;
}

std::vector<AblationRow> run_ablation(const DataBundle& bundle, const ModelConfig& model_cfg,
                                      const TrainConfig& cfg,
                                      const std::vector<std::string>& variants,
                                      std::ostream* log) {
  std::vector<AblationRow> rows;
  for (const auto& v : variants) {
    emit(log, {{"event", "variant"}, {"variant", v}});
    rows.push_back({v, train_fresh(bundle, ablation_variant(model_cfg, v), cfg, log)});
  }
  return rows;
}

SylvesterReport run_sylvester(const DataBundle& bundle, const std::vector<double>& alphas,
                              Calibration calibration, double tol, int max_iter,
                              std::ostream* log) {
  if (alphas.empty()) throw ConfigError("no alpha values given");
  const auto t0 = Clock::now();
  const PriorAssociation& prior = bundle.data.prior;
  const NormalizedNetwork g1 = symmetric_normalize(bundle.data.users);
  const NormalizedNetwork g2 = symmetric_normalize(bundle.data.items);
  const Matrix h_train = prior.h.cwiseProduct(bundle.split.train_mask);

  SylvesterReport rep;
  bool have_best = false;
  for (double alpha : alphas) {
    SolverConfig sc;
    sc.alpha = alpha;
    sc.tol = tol;
    sc.max_iter = max_iter;
    const SolutionX sol = fixed_point_solve(g1.norm_adjacency, g2.norm_adjacency, h_train, sc);
    const SylvesterPrediction pred =
        sylvester_predict(sol, h_train, bundle.split.train_mask, prior.min_class(),
                          prior.max_class(), calibration, log);
    SylvesterRun run;
    run.alpha = alpha;
    run.iterations = sol.iterations;
    run.converged = sol.converged;
    run.val_rmse = evaluate_rmse(pred.ratings, prior.h, bundle.split.val_mask);
    run.test_rmse = evaluate_rmse(pred.ratings, prior.h, bundle.split.test_mask);
    run.scale = pred.scale;
    run.offset = pred.offset;
    rep.grid.push_back(run);
    emit(log, {{"event", "sylvester"}, {"alpha", alpha}, {"iterations", run.iterations},
               {"converged", run.converged}, {"val_rmse", run.val_rmse},
               {"test_rmse", run.test_rmse}, {"scale", run.scale}, {"offset", run.offset}});
    if (!have_best || run.val_rmse < rep.best.val_rmse) {
      rep.best = run;
      have_best = true;
    }
  }
  rep.wall_seconds = seconds_since(t0);
  return rep;
}

DataBundle make_small_instance(Index n1, Index n2, std::uint64_t seed) {
  SyntheticOptions o;
  o.users = n1;
  o.items = n2;
  o.user_communities = 2;
  o.item_communities = 2;
  o.observed_fraction = 0.6;
  o.p_in = 0.7;
  o.p_out = 0.2;
  o.feature_dim = 3;
  o.seed = seed;
  DataBundle b;
  b.data = make_synthetic(o);
  b.split.train_mask = b.data.prior.mask;
  b.split.val_mask = b.data.prior.mask;
  b.split.test_mask = b.data.prior.mask;
  return b;
}

ModelConfig gradcheck_config(ModelKind kind) {
  ModelConfig cfg = default_config(kind);
  cfg.hidden_dim = 3;
  cfg.cge_levels = 2;
  cfg.use_cge = cfg.use_attention = cfg.use_prior = cfg.use_cross = true;
  cfg.binarize_prior = true;
  return cfg;
}

ad::GradCheckReport model_gradcheck(const DataBundle& bundle, const ModelConfig& cfg, double eps,
                                    double tol) {
  const ModelInputs inputs = make_model_inputs(bundle.data, bundle.split.train_mask, cfg);
  const auto model = make_model(inputs, cfg);
  // Move every parameter off its initial value so that constant
  // initializations (sigma, fusion, output map) are exercised generically.
  std::mt19937_64 rng(cfg.seed + 17);
  std::uniform_real_distribution<double> jitter(-0.3, 0.3);
  for (auto& p : model->params()) {
    for (Index k = 0; k < p.value.size(); ++k) p.value.data()[k] += jitter(rng);
  }
  const std::vector<Index> rows = all_rows(inputs.n1());
  const double normalizer = static_cast<double>(inputs.train_count);
  Model& m = *model;
  return ad::finite_diff_check([&](ad::Tape& tape) { return m.batch_loss(tape, rows, normalizer); },
                               model->params(), eps, tol);
}

std::string report_json(const RunReport& r) {
  json j = {{"model", r.model},
            {"seed", r.seed},
            {"epochs_run", r.epochs_run},
            {"best_val_rmse", r.best_val_rmse},
            {"test_rmse", r.test_rmse},
            {"param_count", r.param_count},
            {"peak_activation_elems", r.peak_activation_elems},
            {"wall_seconds", r.wall_seconds},
            {"best_epoch", r.best_epoch},
            {"init_val_rmse", r.init_val_rmse}};
  return j.dump(2);
}

void write_report(const std::filesystem::path& path, const RunReport& report) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write report " + path.string());
  out << report_json(report) << '\n';
}

}  // namespace symgnn
