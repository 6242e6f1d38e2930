// Command-line front end: sylvester, train, evaluate, ablate, build-graph,
// gradcheck.

#include "symgnn/checkpoint.hpp"
#include "symgnn/graph_data.hpp"
#include "symgnn/model.hpp"
#include "symgnn/sylvester.hpp"
#include "symgnn/train.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>

using namespace symgnn;

namespace {

struct Common {
  std::string data = "ml-100k";
  std::string data_root;
  int k = -1;
  std::string metric = "cosine";
  std::uint64_t split_seed = 1;
  std::string test_pairs;
  std::string config;
  std::string log_path;
  std::string report_path;
};

struct Training {
  std::string model = "lowrank";
  int epochs = -1;
  long batch_rows = -1;
  double lr = -1;
  double weight_decay = -1;
  long seed = -1;
  int patience = -1;
  int eval_every = -1;
  long hidden_dim = -1;
  int cge_levels = -1;
  std::string channels;
  bool id_features = false;
  int repeats = 1;
  std::string checkpoint;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--data", c.data, "ml-100k, synthetic, toy, or a dataset directory");
  app->add_option("--data-root", c.data_root,
                  std::string("Directory holding datasets (default $") + kDataRootEnv + " or ./data)");
  app->add_option("--k", c.k, "k for the k-NN side graphs");
  app->add_option("--metric", c.metric, "k-NN metric: cosine or euclidean");
  app->add_option("--split-seed", c.split_seed, "Seed of the random rating split");
  app->add_option("--test-pairs", c.test_pairs, "CSV of row,col test entries");
  app->add_option("--config", c.config, "key = value overrides");
  app->add_option("--log", c.log_path, "Line-delimited JSON run log (- for stdout)");
  app->add_option("--report", c.report_path, "Write a JSON report here");
}

void add_training(CLI::App* app, Training& t) {
  app->add_option("--model", t.model, "base or lowrank");
  app->add_option("--epochs", t.epochs);
  app->add_option("--batch-rows", t.batch_rows, "User rows per batch");
  app->add_option("--lr", t.lr);
  app->add_option("--weight-decay", t.weight_decay);
  app->add_option("--seed", t.seed);
  app->add_option("--patience", t.patience, "Early-stopping patience in epochs");
  app->add_option("--eval-every", t.eval_every);
  app->add_option("--hidden-dim", t.hidden_dim);
  app->add_option("--cge-levels", t.cge_levels);
  app->add_option("--channels", t.channels, "Comma list of cge,attention,prior,cross");
  app->add_flag("--id-features", t.id_features, "Append one-hot node ids to the features");
}

struct Setup {
  DataOptions data;
  TrainConfig train;
  ModelConfig model;
};

// Precedence: defaults, then the config file, then explicit flags.
Setup resolve(const Common& c, const Training* t) {
  Setup s;
  ModelKind kind = ModelKind::lowrank;
  if (t != nullptr) kind = parse_model_kind(t->model);
  s.model = default_config(kind);
  s.data.name = c.data;
  s.data.knn_k = kind == ModelKind::base ? 12 : 10;
  if (!c.config.empty()) {
    const ConfigFile f = read_config_file(c.config);
    for (const auto& [key, value] : f.entries) {
      if (key == "model") s.model = default_config(parse_model_kind(value));
    }
    apply_config(f, &s.data, &s.train, &s.model);
  }
  s.data.root = c.data_root;
  if (c.k > 0) s.data.knn_k = c.k;
  s.data.metric = parse_metric(c.metric);
  s.data.split_seed = c.split_seed;
  s.data.test_pairs = c.test_pairs;
  if (t != nullptr) {
    if (t->epochs >= 0) s.train.epochs = t->epochs;
    if (t->batch_rows > 0) s.train.batch_rows = t->batch_rows;
    if (t->lr >= 0) s.train.lr = t->lr;
    if (t->weight_decay >= 0) s.train.weight_decay = t->weight_decay;
    if (t->seed >= 0) s.train.seed = static_cast<std::uint64_t>(t->seed);
    if (t->patience > 0) s.train.patience = t->patience;
    if (t->eval_every > 0) s.train.eval_every = t->eval_every;
    if (t->hidden_dim > 0) s.model.hidden_dim = t->hidden_dim;
    if (t->cge_levels > 0) s.model.cge_levels = t->cge_levels;
    if (!t->channels.empty()) apply_setting(s.model, "channels", t->channels);
    if (t->id_features) s.model.id_features = true;
  }
  s.model.seed = s.train.seed;
  return s;
}

class LogSink {
 public:
  explicit LogSink(const std::string& path) {
    if (path == "-") {
      out_ = &std::cout;
    } else if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw Error("cannot open log file " + path);
      out_ = file_.get();
    }
  }
  std::ostream* get() const { return out_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* out_ = nullptr;
};

void print_run(const RunReport& r) {
  std::cout << std::fixed << std::setprecision(4) << r.model << " seed=" << r.seed
            << " epochs=" << r.epochs_run << " best_val_rmse=" << r.best_val_rmse
            << " test_rmse=" << r.test_rmse << " params=" << r.param_count
            << " peak_activation_elems=" << r.peak_activation_elems << " wall_seconds=" << std::setprecision(1)
            << r.wall_seconds << '\n';
}

std::vector<double> parse_doubles(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  return out;
}

Matrix read_feature_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open feature file " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> r;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        r.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ParseError(path + ": non-numeric cell '" + cell + "' on row " +
                         std::to_string(rows.size() + 1));
      }
    }
    if (!rows.empty() && r.size() != rows.front().size()) {
      throw ParseError(path + ": ragged row " + std::to_string(rows.size() + 1));
    }
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw ParseError(path + ": no rows");
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  return m;
}

void write_edges(const std::string& path, const Network& net) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "src,dst\n";
  for (Index i = 0; i < net.adjacency.outerSize(); ++i) {
    for (SparseMatrix::InnerIterator it(net.adjacency, i); it; ++it) {
      if (it.col() > i) out << i << ',' << it.col() << '\n';
    }
  }
}

void graph_summary(const std::string& label, const Network& net) {
  const NormalizedNetwork nn = symmetric_normalize(net);
  const double edges = static_cast<double>(net.adjacency.nonZeros()) / 2.0;
  std::cout << label << ": nodes=" << net.size() << " edges=" << edges
            << " mean_degree=" << std::setprecision(3) << std::fixed
            << (net.size() ? 2.0 * edges / static_cast<double>(net.size()) : 0.0)
            << " spectral_radius=" << spectral_radius(nn.norm_adjacency) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph-regularized matrix completion with Sylvester-style aggregation"};
  app.require_subcommand(1);

  Common sylv_c;
  std::string alphas = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9";
  std::string calibration = "affine";
  double tol = 1e-9;
  int max_iter = 10000;
  std::string export_path;
  auto* sylv = app.add_subcommand("sylvester", "Solve the classic Sylvester equation and score it");
  add_common(sylv, sylv_c);
  sylv->add_option("--alpha", alphas, "Comma list of alpha values; the best on validation wins");
  sylv->add_option("--calibration", calibration, "affine or clip");
  sylv->add_option("--tol", tol);
  sylv->add_option("--max-iter", max_iter);
  sylv->add_option("--export", export_path, "Write the best solution as row,col,value triplets");

  Common train_c;
  Training train_t;
  auto* train_cmd = app.add_subcommand("train", "Train a model");
  add_common(train_cmd, train_c);
  add_training(train_cmd, train_t);
  train_cmd->add_option("--repeats", train_t.repeats, "Train with consecutive seeds and average");
  train_cmd->add_option("--checkpoint", train_t.checkpoint, "Save the best parameters here");

  Common eval_c;
  Training eval_t;
  auto* eval_cmd = app.add_subcommand("evaluate", "Score a saved checkpoint on the test split");
  add_common(eval_cmd, eval_c);
  add_training(eval_cmd, eval_t);
  eval_cmd->add_option("--checkpoint", eval_t.checkpoint)->required();

  Common abl_c;
  Training abl_t;
  std::string variants = "full,G,A";
  auto* abl = app.add_subcommand("ablate", "Compare the full model with single-aggregation variants");
  add_common(abl, abl_c);
  add_training(abl, abl_t);
  abl->add_option("--variants", variants, "Comma list of full, G, A");

  Common graph_c;
  std::string features;
  std::string out_prefix;
  auto* graph = app.add_subcommand("build-graph", "Build k-NN side graphs");
  add_common(graph, graph_c);
  graph->add_option("--features", features, "CSV of node features; otherwise the dataset's");
  graph->add_option("--out", out_prefix, "Edge-list prefix: <out>_users.csv, <out>_items.csv");

  std::string gc_model = "base";
  std::string gc_size = "4x5";
  double gc_eps = 1e-6;
  double gc_tol = 1e-4;
  std::uint64_t gc_seed = 1;
  auto* gc = app.add_subcommand("gradcheck", "Finite-difference check of a full model's gradients");
  gc->add_option("--model", gc_model, "base or lowrank");
  gc->add_option("--size", gc_size, "n1xn2 instance size");
  gc->add_option("--eps", gc_eps);
  gc->add_option("--tol", gc_tol);
  gc->add_option("--seed", gc_seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*sylv) {
      const Setup s = resolve(sylv_c, nullptr);
      LogSink log(sylv_c.log_path);
      const DataBundle b = load_bundle(s.data);
      const Calibration cal =
          calibration == "clip" ? Calibration::clip : Calibration::affine;
      if (calibration != "clip" && calibration != "affine") {
        throw ConfigError("calibration must be affine or clip");
      }
      const auto alpha_list = parse_doubles(alphas);
      const SylvesterReport rep = run_sylvester(b, alpha_list, cal, tol, max_iter, log.get());
      std::cout << std::fixed << std::setprecision(4);
      for (const auto& g : rep.grid) {
        std::cout << "alpha=" << g.alpha << " iterations=" << g.iterations
                  << (g.converged ? "" : " (not converged)") << " val_rmse=" << g.val_rmse
                  << " test_rmse=" << g.test_rmse << '\n';
      }
      std::cout << "best alpha=" << rep.best.alpha << " test_rmse=" << rep.best.test_rmse << '\n';
      SolverConfig sc;
      sc.alpha = rep.best.alpha;
      sc.tol = tol;
      sc.max_iter = max_iter;
      const NormalizedNetwork g1 = symmetric_normalize(b.data.users);
      const NormalizedNetwork g2 = symmetric_normalize(b.data.items);
      const Matrix h = b.data.prior.h.cwiseProduct(b.split.train_mask);
      if (h.size() <= 16 || !export_path.empty()) {
        const SolutionX sol = fixed_point_solve(g1.norm_adjacency, g2.norm_adjacency, h, sc);
        if (h.size() <= 16) std::cout << "X =\n" << std::setprecision(6) << sol.x << '\n';
        if (!export_path.empty()) {
          std::ofstream out(export_path);
          if (!out) throw Error("cannot write " + export_path);
          write_triplets(out, sol.x);
        }
      }
      if (!sylv_c.report_path.empty()) {
        std::ofstream out(sylv_c.report_path);
        out << "{\n  \"model\": \"sylvester\",\n  \"alpha\": " << rep.best.alpha
            << ",\n  \"best_val_rmse\": " << rep.best.val_rmse
            << ",\n  \"test_rmse\": " << rep.best.test_rmse
            << ",\n  \"wall_seconds\": " << rep.wall_seconds << "\n}\n";
      }
      return 0;
    }

    if (*train_cmd) {
      const Setup s = resolve(train_c, &train_t);
      LogSink log(train_c.log_path);
      const DataBundle b = load_bundle(s.data);
      std::cout << "train-mean baseline test_rmse=" << std::fixed << std::setprecision(4)
                << train_mean_rmse(b) << '\n';
      if (train_t.repeats > 1) {
        const RepeatSummary sum = train_repeats(b, s.model, s.train, train_t.repeats, log.get());
        for (const auto& r : sum.runs) print_run(r);
        std::cout << std::setprecision(4) << "mean test_rmse=" << sum.mean_test_rmse
                  << " std=" << sum.std_test_rmse << " over " << sum.runs.size() << " seeds\n";
        if (!train_c.report_path.empty()) {
          RunReport agg = sum.runs.front();
          agg.test_rmse = sum.mean_test_rmse;
          double val = 0.0;
          double wall = 0.0;
          for (const auto& r : sum.runs) {
            val += r.best_val_rmse;
            wall += r.wall_seconds;
          }
          agg.best_val_rmse = val / static_cast<double>(sum.runs.size());
          agg.wall_seconds = wall;
          write_report(train_c.report_path, agg);
        }
      } else {
        const RunReport r = train_fresh(b, s.model, s.train, log.get(), train_t.checkpoint);
        print_run(r);
        if (!train_c.report_path.empty()) write_report(train_c.report_path, r);
      }
      return 0;
    }

    if (*eval_cmd) {
      const Setup s = resolve(eval_c, &eval_t);
      const DataBundle b = load_bundle(s.data);
      const ModelInputs in = make_model_inputs(b.data, b.split.train_mask, s.model);
      const auto model = make_model(in, s.model);
      ad::load_parameters(eval_t.checkpoint, model->params());
      const Matrix pred = model->predict();
      std::cout << std::fixed << std::setprecision(4)
                << "val_rmse=" << evaluate_rmse(pred, b.data.prior.h, b.split.val_mask)
                << " test_rmse=" << evaluate_rmse(pred, b.data.prior.h, b.split.test_mask) << '\n';
      return 0;
    }

    if (*abl) {
      const Setup s = resolve(abl_c, &abl_t);
      LogSink log(abl_c.log_path);
      const DataBundle b = load_bundle(s.data);
      std::vector<std::string> names;
      std::stringstream ss(variants);
      for (std::string v; std::getline(ss, v, ',');) names.push_back(v);
      const auto rows = run_ablation(b, s.model, s.train, names, log.get());
      std::cout << std::left << std::setw(8) << "variant" << std::setw(12) << "test_rmse"
                << std::setw(14) << "peak_elems" << "params\n";
      for (const auto& row : rows) {
        std::cout << std::setw(8) << row.variant << std::setw(12) << std::fixed
                  << std::setprecision(4) << row.report.test_rmse << std::setw(14)
                  << row.report.peak_activation_elems << row.report.param_count << '\n';
      }
      return 0;
    }

    if (*graph) {
      const Setup s = resolve(graph_c, nullptr);
      if (!features.empty()) {
        const Network net = knn_graph(read_feature_csv(features), s.data.knn_k, s.data.metric);
        graph_summary("graph", net);
        if (!out_prefix.empty()) write_edges(out_prefix + ".csv", net);
        return 0;
      }
      const DataBundle b = load_bundle(s.data);
      graph_summary("users", b.data.users);
      graph_summary("items", b.data.items);
      if (!out_prefix.empty()) {
        write_edges(out_prefix + "_users.csv", b.data.users);
        write_edges(out_prefix + "_items.csv", b.data.items);
      }
      return 0;
    }

    if (*gc) {
      Index n1 = 0;
      Index n2 = 0;
      char x = 0;
      std::stringstream ss(gc_size);
      if (!(ss >> n1 >> x >> n2) || x != 'x' || n1 < 2 || n2 < 2) {
        throw ConfigError("--size must look like 4x5");
      }
      ModelConfig cfg = gradcheck_config(parse_model_kind(gc_model));
      cfg.seed = gc_seed;
      const DataBundle b = make_small_instance(n1, n2, gc_seed);
      const ad::GradCheckReport rep = model_gradcheck(b, cfg, gc_eps, gc_tol);
      std::cout << std::left << std::setw(28) << "parameter" << std::setw(10) << "elements"
                << std::setw(14) << "max_rel_err" << "status\n";
      for (const auto& e : rep.entries) {
        std::cout << std::setw(28) << e.name << std::setw(10) << e.elements << std::setw(14)
                  << std::scientific << std::setprecision(3) << e.max_rel_error
                  << (e.passed ? "pass" : "FAIL") << '\n';
      }
      std::cout << (rep.passed() ? "gradcheck passed" : "gradcheck FAILED") << " (worst "
                << rep.worst() << ", tolerance " << rep.tolerance << ")\n";
      return rep.passed() ? 0 : 1;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
