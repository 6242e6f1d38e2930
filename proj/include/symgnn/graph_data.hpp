#pragma once

// Input networks, prior association matrices, and rating splits.

#include "symgnn/common.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace symgnn {

// One input graph: adjacency plus node features.
struct Network {
  SparseMatrix adjacency;  // n x n, symmetric, nonnegative, zero diagonal
  Matrix features;         // n x d
  // Set for a missing network; normalization then yields the identity.
  bool identity = false;

  Index size() const { return adjacency.rows(); }
  Index feature_dim() const { return features.cols(); }

  // Throws ValidationError describing the first violated invariant.
  void validate() const;
};

struct NormalizedNetwork {
  SparseMatrix norm_adjacency;  // D^{-1/2} A D^{-1/2}, or I for identity networks
  Vector degree;
  Matrix features;

  Index size() const { return norm_adjacency.rows(); }
};

// Partially observed cross-network matrix.
struct PriorAssociation {
  Matrix h;                     // n1 x n2, zero where unobserved
  Matrix mask;                  // n1 x n2, 0/1
  std::vector<double> classes;  // ascending, distinct

  Index rows() const { return h.rows(); }
  Index cols() const { return h.cols(); }
  Index observed_count() const;
  double min_class() const { return classes.front(); }
  double max_class() const { return classes.back(); }
  // Position of a rating in `classes`, or -1.
  int class_index(double rating) const;
  void validate() const;
};

struct RatingSplit {
  Matrix train_mask;
  Matrix val_mask;
  Matrix test_mask;

  void validate(const PriorAssociation& prior) const;
};

// Observed (row, col, value) triplets of a masked matrix, row-major order.
struct Entries {
  std::vector<Index> rows;
  std::vector<Index> cols;
  Vector values;

  std::size_t size() const { return rows.size(); }
};

Entries masked_entries(const Matrix& h, const Matrix& mask);

enum class Metric { euclidean, cosine };
Metric parse_metric(const std::string& name);

NormalizedNetwork symmetric_normalize(const Network& net);

// Union-symmetrized unweighted k-NN graph. Ties are broken by lower index.
Network knn_graph(const Matrix& features, int k, Metric metric);

// Identity columns truncated or zero-padded to d.
Matrix identity_features(Index n, Index d);
Network identity_network(Index n, Index d);

// Dominant |eigenvalue| of a symmetric matrix by power iteration.
double spectral_radius(const SparseMatrix& a, int max_iter = 1000, double tol = 1e-12);

struct Dataset {
  std::string name;
  Network users;
  Network items;
  PriorAssociation prior;
};

struct MovieLensOptions {
  int user_k = 10;
  int item_k = 10;
  Metric metric = Metric::cosine;
};

// Reads u.data, u.user and u.item from a MovieLens-100K directory.
Dataset load_movielens_100k(const std::filesystem::path& dir, const MovieLensOptions& opts = {});

// Feature encodings used by the loader, exposed for testing.
Matrix encode_ml100k_users(const std::filesystem::path& u_user, std::size_t expected);
Matrix encode_ml100k_items(const std::filesystem::path& u_item, std::size_t expected);

// CSV with header `row,col,rating`, 0-based indices. Duplicate cells keep the
// last rating and emit a warning on `warn` when given.
PriorAssociation load_triplets(std::istream& in, Index n1, Index n2, std::vector<double> classes,
                               std::ostream* warn = nullptr);
PriorAssociation load_triplets(const std::filesystem::path& path, Index n1, Index n2,
                               std::vector<double> classes, std::ostream* warn = nullptr);

void write_triplets(std::ostream& out, const Matrix& values, const Matrix* mask = nullptr);

struct SplitFractions {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

RatingSplit split_ratings(const PriorAssociation& prior, const SplitFractions& fractions,
                          std::uint64_t seed);

// Test entries from a `row,col` CSV; the remaining observations are split into
// train and validation with `val_fraction` of them held out for validation.
RatingSplit split_from_test_pairs(const PriorAssociation& prior, std::istream& test_pairs,
                                  double val_fraction, std::uint64_t seed);

struct SyntheticOptions {
  Index users = 200;
  Index items = 150;
  int user_communities = 4;
  int item_communities = 3;
  double observed_fraction = 0.3;
  double p_in = 0.15;
  double p_out = 0.01;
  Index feature_dim = 8;
  std::uint64_t seed = 1;
};

// Rank-2 ratings on {1..5} generated from community-level latent factors,
// with stochastic-block-model side graphs sharing the same communities.
Dataset make_synthetic(const SyntheticOptions& opts);

// The two-node example: both graphs a single edge, H = I.
Dataset make_toy();

}  // namespace symgnn
