#include "symgnn/graph_data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace symgnn {
namespace {

constexpr double kSymmetryTol = 1e-12;

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

long parse_long(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const long v = std::stol(trim(s), &used);
    if (used != trim(s).size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError(where + ": expected integer, got '" + s + "'");
  }
}

double parse_double(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(trim(s), &used);
    if (used != trim(s).size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError(where + ": expected number, got '" + s + "'");
  }
}

std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IntegrityError("cannot open " + path.string());
  return in;
}

SparseMatrix sparse_identity(Index n) {
  SparseMatrix id(n, n);
  id.setIdentity();
  return id;
}

}  // namespace

void Network::validate() const {
  if (adjacency.rows() != adjacency.cols()) {
    throw ValidationError("adjacency must be square, got " + shape_str(adjacency));
  }
  if (features.rows() != adjacency.rows()) {
    throw ValidationError("features have " + std::to_string(features.rows()) + " rows for " +
                          std::to_string(adjacency.rows()) + " nodes");
  }
  const SparseMatrix at = adjacency.transpose();
  for (Index i = 0; i < adjacency.outerSize(); ++i) {
    for (SparseMatrix::InnerIterator it(adjacency, i); it; ++it) {
      if (it.value() < 0.0) {
        throw ValidationError("negative adjacency weight at (" + std::to_string(it.row()) + "," +
                              std::to_string(it.col()) + ")");
      }
      if (it.row() == it.col() && it.value() != 0.0) {
        throw ValidationError("nonzero adjacency diagonal at node " + std::to_string(it.row()));
      }
    }
  }
  const SparseMatrix diff = adjacency - at;
  for (Index i = 0; i < diff.outerSize(); ++i) {
    for (SparseMatrix::InnerIterator it(diff, i); it; ++it) {
      if (std::abs(it.value()) > kSymmetryTol) {
        throw ValidationError("adjacency not symmetric at (" + std::to_string(it.row()) + "," +
                              std::to_string(it.col()) + ")");
      }
    }
  }
}

Index PriorAssociation::observed_count() const {
  return static_cast<Index>(std::llround(mask.sum()));
}

int PriorAssociation::class_index(double rating) const {
  for (std::size_t k = 0; k < classes.size(); ++k) {
    if (classes[k] == rating) return static_cast<int>(k);
  }
  return -1;
}

void PriorAssociation::validate() const {
  if (h.rows() != mask.rows() || h.cols() != mask.cols()) {
    throw ValidationError("prior and mask shapes differ: " + shape_str(h) + " vs " + shape_str(mask));
  }
  if (classes.empty()) throw ValidationError("rating class list is empty");
  if (!std::is_sorted(classes.begin(), classes.end()) ||
      std::adjacent_find(classes.begin(), classes.end()) != classes.end()) {
    throw ValidationError("rating classes must be ascending and distinct");
  }
  for (Index j = 0; j < h.cols(); ++j) {
    for (Index i = 0; i < h.rows(); ++i) {
      const double m = mask(i, j);
      if (m != 0.0 && m != 1.0) throw ValidationError("mask is not binary");
      if (h(i, j) != 0.0 && m == 0.0) {
        throw ValidationError("unmasked nonzero prior at (" + std::to_string(i) + "," +
                              std::to_string(j) + ")");
      }
      if (m == 1.0 && class_index(h(i, j)) < 0) {
        throw ValidationError("rating " + std::to_string(h(i, j)) + " at (" + std::to_string(i) +
                              "," + std::to_string(j) + ") is not a declared class");
      }
    }
  }
}

void RatingSplit::validate(const PriorAssociation& prior) const {
  for (const Matrix* m : {&train_mask, &val_mask, &test_mask}) {
    if (m->rows() != prior.rows() || m->cols() != prior.cols()) {
      throw ValidationError("split mask shape " + shape_str(*m) + " differs from prior " +
                            shape_str(prior.h));
    }
  }
  const Matrix total = train_mask + val_mask + test_mask;
  if ((total.array() > prior.mask.array()).any()) {
    throw ValidationError("split masks overlap or cover unobserved entries");
  }
}

Entries masked_entries(const Matrix& h, const Matrix& mask) {
  Entries e;
  std::vector<double> vals;
  for (Index i = 0; i < mask.rows(); ++i) {
    for (Index j = 0; j < mask.cols(); ++j) {
      if (mask(i, j) != 0.0) {
        e.rows.push_back(i);
        e.cols.push_back(j);
        vals.push_back(h(i, j));
      }
    }
  }
  e.values = Eigen::Map<Vector>(vals.data(), static_cast<Index>(vals.size()));
  return e;
}

Metric parse_metric(const std::string& name) {
  if (name == "euclidean") return Metric::euclidean;
  if (name == "cosine") return Metric::cosine;
  throw ConfigError("unknown metric '" + name + "'");
}

NormalizedNetwork symmetric_normalize(const Network& net) {
  NormalizedNetwork out;
  out.features = net.features;
  const Index n = net.size();
  if (net.identity) {
    out.norm_adjacency = sparse_identity(n);
    out.degree = Vector::Ones(n);
    return out;
  }
  net.validate();
  out.degree = Vector::Zero(n);
  for (Index i = 0; i < net.adjacency.outerSize(); ++i) {
    for (SparseMatrix::InnerIterator it(net.adjacency, i); it; ++it) out.degree(i) += it.value();
  }
  Vector inv_sqrt(n);
  for (Index i = 0; i < n; ++i) {
    inv_sqrt(i) = out.degree(i) > 0.0 ? 1.0 / std::sqrt(out.degree(i)) : 0.0;
  }
  out.norm_adjacency = inv_sqrt.asDiagonal() * net.adjacency * inv_sqrt.asDiagonal();
  out.norm_adjacency.makeCompressed();
  return out;
}

Network knn_graph(const Matrix& features, int k, Metric metric) {
  const Index n = features.rows();
  if (k < 1 || k >= n) {
    throw ParameterError("knn_graph: k must satisfy 1 <= k < n (k=" + std::to_string(k) +
                         ", n=" + std::to_string(n) + ")");
  }
  if (!features.allFinite()) throw ParameterError("knn_graph: features contain non-finite values");

  // Distances are evaluated pairwise (not through a Gram expansion) so that
  // duplicate points produce exactly equal distances and the index tie-break
  // applies.
  Matrix unit = features;
  if (metric == Metric::cosine) {
    for (Index i = 0; i < n; ++i) {
      const double norm = features.row(i).norm();
      if (norm > 0.0) unit.row(i) /= norm;
    }
  }
  Matrix dist(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      dist(i, j) = metric == Metric::euclidean ? (features.row(i) - features.row(j)).squaredNorm()
                                               : 1.0 - unit.row(i).dot(unit.row(j));
    }
  }

  std::vector<Eigen::Triplet<double>> trips;
  std::set<std::pair<Index, Index>> edges;
  std::vector<Index> order;
  for (Index i = 0; i < n; ++i) {
    order.resize(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    order.erase(order.begin() + i);
    std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](Index a, Index b) {
      const double da = dist(i, a), db = dist(i, b);
      if (da != db) return da < db;
      return a < b;
    });
    for (int r = 0; r < k; ++r) {
      const Index j = order[static_cast<std::size_t>(r)];
      edges.emplace(std::min(i, j), std::max(i, j));
    }
  }
  for (const auto& [a, b] : edges) {
    trips.emplace_back(a, b, 1.0);
    trips.emplace_back(b, a, 1.0);
  }
  Network net;
  net.adjacency.resize(n, n);
  net.adjacency.setFromTriplets(trips.begin(), trips.end());
  net.features = features;
  return net;
}

Matrix identity_features(Index n, Index d) {
  Matrix f = Matrix::Zero(n, d);
  for (Index i = 0; i < std::min(n, d); ++i) f(i, i) = 1.0;
  return f;
}

Network identity_network(Index n, Index d) {
  if (n < 1) throw ParameterError("identity_network: n must be positive");
  Network net;
  net.adjacency.resize(n, n);
  net.features = identity_features(n, d);
  net.identity = true;
  return net;
}

double spectral_radius(const SparseMatrix& a, int max_iter, double tol) {
  const Index n = a.rows();
  if (n == 0) return 0.0;
  // Deterministic start vector with no symmetry that could hide an eigenvector.
  Vector x(n);
  for (Index i = 0; i < n; ++i) x(i) = 1.0 + 0.1 * std::sin(static_cast<double>(i) + 1.0);
  x.normalize();
  double lambda = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    // Iterate with A^2 so that +-lambda pairs (bipartite graphs) still converge.
    Vector y = a * (a * x);
    const double norm = y.norm();
    if (norm == 0.0) return 0.0;
    const double next = std::sqrt(norm);
    y /= norm;
    x = y;
    if (std::abs(next - lambda) <= tol * std::max(1.0, next)) return next;
    lambda = next;
  }
  return lambda;
}

Matrix encode_ml100k_users(const std::filesystem::path& u_user, std::size_t expected) {
  auto in = open_or_throw(u_user);
  struct Row {
    long age;
    std::string gender;
    std::string occupation;
  };
  std::map<long, Row> rows;
  std::set<std::string> occupations;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto f = split(line, '|');
    const std::string where = u_user.filename().string() + ":" + std::to_string(lineno);
    if (f.size() < 4) throw ParseError(where + ": expected id|age|gender|occupation|zip");
    const long id = parse_long(f[0], where);
    rows[id] = Row{parse_long(f[1], where), trim(f[2]), trim(f[3])};
    occupations.insert(trim(f[3]));
  }
  if (rows.size() != expected) {
    throw IntegrityError(u_user.string() + ": expected " + std::to_string(expected) + " users, found " +
                         std::to_string(rows.size()));
  }
  const std::vector<std::string> occ(occupations.begin(), occupations.end());
  // Age buckets: <18, 18-24, 25-34, 35-44, 45-49, 50-55, 56+
  constexpr long kAgeEdges[] = {18, 25, 35, 45, 50, 56};
  constexpr Index kAgeBuckets = 7;
  const Index d = kAgeBuckets + 2 + static_cast<Index>(occ.size());
  Matrix f = Matrix::Zero(static_cast<Index>(expected), d);
  for (const auto& [id, r] : rows) {
    if (id < 1 || id > static_cast<long>(expected)) {
      throw IntegrityError("user id " + std::to_string(id) + " out of range");
    }
    const Index i = id - 1;
    Index bucket = 0;
    for (long edge : kAgeEdges) {
      if (r.age >= edge) ++bucket;
    }
    f(i, bucket) = 1.0;
    f(i, kAgeBuckets + (r.gender == "F" ? 1 : 0)) = 1.0;
    const auto pos = std::lower_bound(occ.begin(), occ.end(), r.occupation) - occ.begin();
    f(i, kAgeBuckets + 2 + pos) = 1.0;
  }
  return f;
}

Matrix encode_ml100k_items(const std::filesystem::path& u_item, std::size_t expected) {
  auto in = open_or_throw(u_item);
  constexpr Index kGenres = 19;
  struct Row {
    std::vector<double> genres;
    int decade;  // -1 when the release date is unknown
  };
  std::map<long, Row> rows;
  std::set<int> decades;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto f = split(line, '|');
    const std::string where = u_item.filename().string() + ":" + std::to_string(lineno);
    if (f.size() < 5 + kGenres) throw ParseError(where + ": expected 24 '|' separated fields");
    const long id = parse_long(f[0], where);
    Row r;
    for (Index g = 0; g < kGenres; ++g) {
      r.genres.push_back(static_cast<double>(parse_long(f[5 + static_cast<std::size_t>(g)], where)));
    }
    r.decade = -1;
    const std::string date = trim(f[2]);
    if (date.size() >= 4) {
      const std::string year = date.substr(date.size() - 4);
      if (std::all_of(year.begin(), year.end(), ::isdigit)) {
        r.decade = std::stoi(year) / 10 * 10;
        decades.insert(r.decade);
      }
    }
    rows[id] = std::move(r);
  }
  if (rows.size() != expected) {
    throw IntegrityError(u_item.string() + ": expected " + std::to_string(expected) + " items, found " +
                         std::to_string(rows.size()));
  }
  const std::vector<int> dec(decades.begin(), decades.end());
  Matrix f = Matrix::Zero(static_cast<Index>(expected), kGenres + static_cast<Index>(dec.size()));
  for (const auto& [id, r] : rows) {
    if (id < 1 || id > static_cast<long>(expected)) {
      throw IntegrityError("item id " + std::to_string(id) + " out of range");
    }
    const Index i = id - 1;
    for (Index g = 0; g < kGenres; ++g) f(i, g) = r.genres[static_cast<std::size_t>(g)];
    if (r.decade >= 0) {
      f(i, kGenres + (std::lower_bound(dec.begin(), dec.end(), r.decade) - dec.begin())) = 1.0;
    }
  }
  return f;
}

Dataset load_movielens_100k(const std::filesystem::path& dir, const MovieLensOptions& opts) {
  constexpr Index kUsers = 943, kItems = 1682, kRatings = 100000;
  const auto data_path = dir / "u.data";
  auto in = open_or_throw(data_path);

  Dataset ds;
  ds.name = "ml-100k";
  ds.prior.h = Matrix::Zero(kUsers, kItems);
  ds.prior.mask = Matrix::Zero(kUsers, kItems);
  ds.prior.classes = {1, 2, 3, 4, 5};
  std::string line;
  std::size_t lineno = 0;
  Index count = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const std::string where = "u.data:" + std::to_string(lineno);
    const auto f = split(line, '\t');
    if (f.size() != 4) throw ParseError(where + ": expected 4 tab-separated fields");
    const long u = parse_long(f[0], where);
    const long i = parse_long(f[1], where);
    const long r = parse_long(f[2], where);
    parse_long(f[3], where);
    if (u < 1 || u > kUsers || i < 1 || i > kItems) throw ParseError(where + ": id out of range");
    if (r < 1 || r > 5) throw ParseError(where + ": rating outside 1..5");
    if (ds.prior.mask(u - 1, i - 1) != 0.0) throw IntegrityError(where + ": duplicate rating");
    ds.prior.h(u - 1, i - 1) = static_cast<double>(r);
    ds.prior.mask(u - 1, i - 1) = 1.0;
    ++count;
  }
  if (count != kRatings) {
    throw IntegrityError("u.data: expected " + std::to_string(kRatings) + " ratings, found " +
                         std::to_string(count));
  }
  const Matrix fu = encode_ml100k_users(dir / "u.user", kUsers);
  const Matrix fi = encode_ml100k_items(dir / "u.item", kItems);
  ds.users = knn_graph(fu, opts.user_k, opts.metric);
  ds.items = knn_graph(fi, opts.item_k, opts.metric);
  return ds;
}

PriorAssociation load_triplets(std::istream& in, Index n1, Index n2, std::vector<double> classes,
                               std::ostream* warn) {
  PriorAssociation prior;
  prior.h = Matrix::Zero(n1, n2);
  prior.mask = Matrix::Zero(n1, n2);
  std::sort(classes.begin(), classes.end());
  prior.classes = std::move(classes);
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    if (!header_seen) {
      header_seen = true;
      if (trim(line) == "row,col,rating") continue;
    }
    const std::string where = "line " + std::to_string(lineno);
    const auto f = split(line, ',');
    if (f.size() != 3) throw ParseError(where + ": expected row,col,rating");
    const long i = parse_long(f[0], where);
    const long j = parse_long(f[1], where);
    const double r = parse_double(f[2], where);
    if (i < 0 || i >= n1 || j < 0 || j >= n2) {
      throw ParseError(where + ": index (" + std::to_string(i) + "," + std::to_string(j) +
                       ") out of range for " + shape_str(n1, n2));
    }
    if (prior.class_index(r) < 0) {
      throw ParseError(where + ": rating " + trim(f[2]) + " is not a declared class");
    }
    if (prior.mask(i, j) != 0.0 && warn != nullptr) {
      *warn << "warning: " << where << ": duplicate cell (" << i << "," << j
            << "), keeping the later rating\n";
    }
    prior.h(i, j) = r;
    prior.mask(i, j) = 1.0;
  }
  return prior;
}

PriorAssociation load_triplets(const std::filesystem::path& path, Index n1, Index n2,
                               std::vector<double> classes, std::ostream* warn) {
  auto in = open_or_throw(path);
  return load_triplets(in, n1, n2, std::move(classes), warn);
}

void write_triplets(std::ostream& out, const Matrix& values, const Matrix* mask) {
  out << "row,col,rating\n";
  out.precision(17);
  for (Index i = 0; i < values.rows(); ++i) {
    for (Index j = 0; j < values.cols(); ++j) {
      if (mask != nullptr && (*mask)(i, j) == 0.0) continue;
      out << i << ',' << j << ',' << values(i, j) << '\n';
    }
  }
}

RatingSplit split_ratings(const PriorAssociation& prior, const SplitFractions& fr,
                          std::uint64_t seed) {
  if (fr.train < 0 || fr.val < 0 || fr.test < 0 || fr.train + fr.val + fr.test > 1.0 + 1e-12) {
    throw ParameterError("split fractions must be nonnegative and sum to at most 1");
  }
  const Entries e = masked_entries(prior.h, prior.mask);
  const auto m = static_cast<double>(e.size());
  std::vector<std::size_t> order(e.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const auto n_test = static_cast<std::size_t>(std::llround(fr.test * m));
  const auto n_val = static_cast<std::size_t>(std::llround(fr.val * m));
  std::size_t n_train = static_cast<std::size_t>(std::llround(fr.train * m));
  if (std::abs(fr.train + fr.val + fr.test - 1.0) < 1e-12) n_train = e.size() - n_test - n_val;
  n_train = std::min(n_train, e.size() - std::min(e.size(), n_test + n_val));

  RatingSplit s;
  s.train_mask = Matrix::Zero(prior.rows(), prior.cols());
  s.val_mask = s.train_mask;
  s.test_mask = s.train_mask;
  std::size_t pos = 0;
  for (std::size_t c = 0; c < n_test; ++c, ++pos) s.test_mask(e.rows[order[pos]], e.cols[order[pos]]) = 1;
  for (std::size_t c = 0; c < n_val; ++c, ++pos) s.val_mask(e.rows[order[pos]], e.cols[order[pos]]) = 1;
  for (std::size_t c = 0; c < n_train; ++c, ++pos) s.train_mask(e.rows[order[pos]], e.cols[order[pos]]) = 1;
  return s;
}

RatingSplit split_from_test_pairs(const PriorAssociation& prior, std::istream& test_pairs,
                                  double val_fraction, std::uint64_t seed) {
  if (val_fraction < 0.0 || val_fraction >= 1.0) {
    throw ParameterError("validation fraction must lie in [0, 1)");
  }
  RatingSplit s;
  s.test_mask = Matrix::Zero(prior.rows(), prior.cols());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(test_pairs, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    if (lineno == 1 && trim(line) == "row,col") continue;
    const std::string where = "split line " + std::to_string(lineno);
    const auto f = split(line, ',');
    if (f.size() != 2) throw ParseError(where + ": expected row,col");
    const long i = parse_long(f[0], where);
    const long j = parse_long(f[1], where);
    if (i < 0 || i >= prior.rows() || j < 0 || j >= prior.cols() || prior.mask(i, j) == 0.0) {
      throw ValidationError(where + ": test entry (" + std::to_string(i) + "," + std::to_string(j) +
                            ") is not an observed rating");
    }
    s.test_mask(i, j) = 1.0;
  }
  const Matrix rest = prior.mask - s.test_mask;
  const Entries e = masked_entries(prior.h, rest);
  std::vector<std::size_t> order(e.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_val = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(e.size())));
  s.val_mask = Matrix::Zero(prior.rows(), prior.cols());
  for (std::size_t c = 0; c < n_val; ++c) s.val_mask(e.rows[order[c]], e.cols[order[c]]) = 1.0;
  s.train_mask = rest - s.val_mask;
  return s;
}

Dataset make_synthetic(const SyntheticOptions& o) {
  std::mt19937_64 rng(o.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  auto assign = [&](Index n, int communities) {
    std::vector<int> c(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) c[static_cast<std::size_t>(i)] = static_cast<int>(i % communities);
    std::shuffle(c.begin(), c.end(), rng);
    return c;
  };
  const auto cu = assign(o.users, o.user_communities);
  const auto ci = assign(o.items, o.item_communities);

  auto centers = [&](int communities) {
    Matrix c(communities, 2);
    for (Index k = 0; k < communities; ++k) {
      const double angle = 2.0 * M_PI * static_cast<double>(k) / communities + 0.3;
      c(k, 0) = std::cos(angle);
      c(k, 1) = std::sin(angle);
    }
    return c;
  };
  const Matrix uc = centers(o.user_communities);
  const Matrix ic = centers(o.item_communities);

  auto latent = [&](const std::vector<int>& comm, const Matrix& c) {
    Matrix z(static_cast<Index>(comm.size()), 2);
    for (std::size_t i = 0; i < comm.size(); ++i) {
      for (Index a = 0; a < 2; ++a) z(static_cast<Index>(i), a) = c(comm[i], a) + 0.25 * gauss(rng);
    }
    return z;
  };
  const Matrix zu = latent(cu, uc);
  const Matrix zi = latent(ci, ic);
  Matrix raw = zu * zi.transpose();  // rank 2
  const double mean = raw.mean();
  const double sd = std::sqrt((raw.array() - mean).square().mean());

  Dataset ds;
  ds.name = "synthetic";
  ds.prior.classes = {1, 2, 3, 4, 5};
  ds.prior.h = Matrix::Zero(o.users, o.items);
  ds.prior.mask = Matrix::Zero(o.users, o.items);
  for (Index i = 0; i < o.users; ++i) {
    for (Index j = 0; j < o.items; ++j) {
      if (unif(rng) >= o.observed_fraction) continue;
      const double r = 3.0 + 1.3 * (raw(i, j) - mean) / sd;
      ds.prior.h(i, j) = std::clamp(std::round(r), 1.0, 5.0);
      ds.prior.mask(i, j) = 1.0;
    }
  }

  auto sbm = [&](const std::vector<int>& comm, int communities) {
    const auto n = static_cast<Index>(comm.size());
    std::vector<Eigen::Triplet<double>> trips;
    for (Index i = 0; i < n; ++i) {
      for (Index j = i + 1; j < n; ++j) {
        const double p = comm[static_cast<std::size_t>(i)] == comm[static_cast<std::size_t>(j)] ? o.p_in : o.p_out;
        if (unif(rng) < p) {
          trips.emplace_back(i, j, 1.0);
          trips.emplace_back(j, i, 1.0);
        }
      }
    }
    Network net;
    net.adjacency.resize(n, n);
    net.adjacency.setFromTriplets(trips.begin(), trips.end());
    net.features = Matrix::Zero(n, std::max<Index>(o.feature_dim, communities));
    for (Index i = 0; i < n; ++i) {
      net.features(i, comm[static_cast<std::size_t>(i)]) = 1.0;
      for (Index d = communities; d < net.features.cols(); ++d) net.features(i, d) = 0.3 * gauss(rng);
    }
    return net;
  };
  ds.users = sbm(cu, o.user_communities);
  ds.items = sbm(ci, o.item_communities);
  return ds;
}

Dataset make_toy() {
  Dataset ds;
  ds.name = "toy";
  Network g;
  g.adjacency.resize(2, 2);
  std::vector<Eigen::Triplet<double>> trips = {{0, 1, 1.0}, {1, 0, 1.0}};
  g.adjacency.setFromTriplets(trips.begin(), trips.end());
  g.features = Matrix::Identity(2, 2);
  ds.users = g;
  ds.items = g;
  ds.prior.h = Matrix::Identity(2, 2);
  ds.prior.mask = Matrix::Identity(2, 2);
  ds.prior.classes = {1.0};
  return ds;
}

}  // namespace symgnn
