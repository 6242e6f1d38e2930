#pragma once

// Data bundles, the training loop, evaluation, ablations, and the Sylvester
// baseline runner.

#include "symgnn/gradcheck.hpp"
#include "symgnn/graph_data.hpp"
#include "symgnn/model.hpp"
#include "symgnn/sylvester.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace symgnn {

// Environment variable naming the directory that holds datasets.
inline constexpr const char* kDataRootEnv = "SYMGNN_DATA_ROOT";

struct DataOptions {
  // "ml-100k", "synthetic", "toy", or a directory in MovieLens-100K layout.
  std::string name = "ml-100k";
  std::filesystem::path root;  // empty: $SYMGNN_DATA_ROOT, then ./data
  int knn_k = 10;
  Metric metric = Metric::cosine;
  std::uint64_t split_seed = 1;
  double test_fraction = 0.2;
  // Share of the remaining observations held out for validation.
  double val_fraction = 0.05;
  // Optional `row,col` CSV fixing the test entries.
  std::filesystem::path test_pairs;
  SyntheticOptions synthetic;
};

struct DataBundle {
  Dataset data;
  RatingSplit split;
};

std::filesystem::path resolve_data_root(const std::filesystem::path& explicit_root);
DataBundle load_bundle(const DataOptions& opts);

struct TrainConfig {
  int epochs = 300;
  Index batch_rows = 50;
  double lr = 1e-3;
  double weight_decay = 0.01;
  std::uint64_t seed = 1;
  int patience = 30;
  // Evaluate validation RMSE every this many epochs.
  int eval_every = 1;
  // Checkpoint written if the loss becomes non-finite.
  std::filesystem::path divergence_snapshot;

  void validate() const;
};

// Applies `key = value` settings for training; returns false for keys that are
// not training keys.
bool apply_train_setting(TrainConfig& cfg, const std::string& key, const std::string& value);

// Key-value config file: `key = value` lines, `#` comments. Keys are routed
// to the data, training, or model settings; unknown keys raise ConfigError.
struct ConfigFile {
  std::vector<std::pair<std::string, std::string>> entries;
};
ConfigFile read_config_file(const std::filesystem::path& path);
void apply_config(const ConfigFile& file, DataOptions* data, TrainConfig* train, ModelConfig* model);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_rmse = 0.0;
  double best_val_rmse = 0.0;
  double seconds = 0.0;
};

struct RunReport {
  std::string model;
  std::uint64_t seed = 0;
  int epochs_run = 0;
  int best_epoch = 0;
  double init_val_rmse = 0.0;
  double best_val_rmse = 0.0;
  double test_rmse = 0.0;
  std::size_t param_count = 0;
  std::size_t peak_activation_elems = 0;
  // Largest min(rows, cols) over recorded activations during training.
  Index peak_activation_min_dim = 0;
  double wall_seconds = 0.0;
  std::vector<EpochRecord> history;
};

// sqrt(sum_mask (h - pred)^2 / |mask|). Throws ValidationError on an empty mask.
double evaluate_rmse(const Matrix& predictions, const Matrix& h, const Matrix& mask);
double train_mean_rmse(const DataBundle& bundle);

// Mean of the full-batch loss computed batch by batch at the current
// parameters, without updating anything.
double epoch_loss(Model& model, const std::vector<std::vector<Index>>& batches, double normalizer);
std::vector<std::vector<Index>> make_batches(Index rows, Index batch_rows, std::uint64_t seed,
                                             int epoch);

struct TrainingDiverged : Error {
  using Error::Error;
};

// Trains in place and restores the best-validation parameters. `log` receives
// one JSON object per line.
RunReport train(Model& model, const DataBundle& bundle, const TrainConfig& cfg,
                std::ostream* log = nullptr);

// Builds inputs and model, trains, and reports. The inputs must outlive the
// model, so both are created here.
RunReport train_fresh(const DataBundle& bundle, ModelConfig model_cfg, const TrainConfig& cfg,
                      std::ostream* log = nullptr,
                      const std::filesystem::path& checkpoint = {});

struct RepeatSummary {
  std::vector<RunReport> runs;
  double mean_test_rmse = 0.0;
  double std_test_rmse = 0.0;
};

// Seeds cfg.seed, cfg.seed + 1, ... for both model init and batching.
RepeatSummary train_repeats(const DataBundle& bundle, const ModelConfig& model_cfg,
                            const TrainConfig& cfg, int repeats, std::ostream* log = nullptr);

// Variant names: full, G (no attention branches), A (no CGE branch).
ModelConfig ablation_variant(const ModelConfig& full, const std::string& variant);

struct AblationRow {
  std::string variant;
  RunReport report;
};
std::vector<AblationRow> run_ablation(const DataBundle& bundle, const ModelConfig& model_cfg,
                                      const TrainConfig& cfg,
                                      const std::vector<std::string>& variants,
                                      std::ostream* log = nullptr);

struct SylvesterRun {
  double alpha = 0.0;
  int iterations = 0;
  bool converged = false;
  double val_rmse = 0.0;
  double test_rmse = 0.0;
  double scale = 0.0;
  double offset = 0.0;
};

struct SylvesterReport {
  std::vector<SylvesterRun> grid;
  SylvesterRun best;
  double wall_seconds = 0.0;
};

// Solves for every alpha, picks the best validation RMSE, reports its test RMSE.
SylvesterReport run_sylvester(const DataBundle& bundle, const std::vector<double>& alphas,
                              Calibration calibration, double tol = 1e-9, int max_iter = 10000,
                              std::ostream* log = nullptr);

// A small synthetic instance for gradient checks: every observation is used
// for training, validation, and test alike.
DataBundle make_small_instance(Index n1, Index n2, std::uint64_t seed);

// Every channel/branch enabled, small hidden size, binary prior for the base
// model's prior channel.
ModelConfig gradcheck_config(ModelKind kind);

ad::GradCheckReport model_gradcheck(const DataBundle& bundle, const ModelConfig& cfg,
                                    double eps = 1e-6, double tol = 1e-4);

// Report files are flat JSON objects.
void write_report(const std::filesystem::path& path, const RunReport& report);
std::string report_json(const RunReport& report);

}  // namespace symgnn
