#include "doctest.h"
#include "support.hpp"

#include "symgnn/graph_data.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

using namespace symgnn;
using namespace symgnn::testing;

namespace {

std::set<std::pair<Index, Index>> edge_set(const Network& net) {
  std::set<std::pair<Index, Index>> e;
  for (Index i = 0; i < net.adjacency.outerSize(); ++i) {
    for (SparseMatrix::InnerIterator it(net.adjacency, i); it; ++it) {
      if (it.col() > i) e.emplace(i, it.col());
    }
  }
  return e;
}

// Union k-NN by sorting every row of a brute-force distance table.
std::set<std::pair<Index, Index>> brute_knn(const Matrix& x, int k) {
  std::set<std::pair<Index, Index>> e;
  const Index n = x.rows();
  for (Index i = 0; i < n; ++i) {
    std::vector<std::pair<double, Index>> d;
    for (Index j = 0; j < n; ++j) {
      if (j != i) d.emplace_back((x.row(i) - x.row(j)).squaredNorm(), j);
    }
    std::sort(d.begin(), d.end());
    for (int r = 0; r < k; ++r) e.emplace(std::min(i, d[r].second), std::max(i, d[r].second));
  }
  return e;
}

std::filesystem::path ml100k_dir() {
  if (const char* env = std::getenv("SYMGNN_DATA_ROOT")) return std::filesystem::path(env) / "ml-100k";
  return std::filesystem::path(SYMGNN_TEST_DATA_ROOT) / "ml-100k";
}

}  // namespace

TEST_SUITE("graph_data") {
  TEST_CASE("normalizing a single edge gives the swap matrix") {
    Matrix a(2, 2);
    a << 0, 1, 1, 0;
    const NormalizedNetwork nn = symmetric_normalize(dense_network(a));
    CHECK(Matrix(nn.norm_adjacency).isApprox(a, 0.0));
    CHECK(nn.degree(0) == 1.0);
  }

  TEST_CASE("triangle normalizes to halves off the diagonal") {
    Matrix a = Matrix::Ones(3, 3) - Matrix::Identity(3, 3);
    const Matrix na = symmetric_normalize(dense_network(a)).norm_adjacency;
    for (Index i = 0; i < 3; ++i) {
      for (Index j = 0; j < 3; ++j) CHECK(na(i, j) == doctest::Approx(i == j ? 0.0 : 0.5).epsilon(1e-15));
    }
  }

  TEST_CASE("star graph matches entrywise normalization") {
    Matrix a = Matrix::Zero(4, 4);
    for (Index j = 1; j < 4; ++j) a(0, j) = a(j, 0) = 1.0;
    const Matrix na = symmetric_normalize(dense_network(a)).norm_adjacency;
    const Matrix ref = dense_normalize(a);
    CHECK((na - ref).cwiseAbs().maxCoeff() < 1e-15);
    // frozen: 1 / sqrt(3 * 1)
    for (Index j = 1; j < 4; ++j) CHECK(na(0, j) == doctest::Approx(0.57735026918962573).epsilon(1e-15));
  }

  TEST_CASE("isolated nodes keep zero rows") {
    Matrix a = Matrix::Zero(3, 3);
    a(0, 1) = a(1, 0) = 1.0;
    const Matrix na = symmetric_normalize(dense_network(a)).norm_adjacency;
    CHECK(na.row(2).isZero(0.0));
    CHECK(na.col(2).isZero(0.0));
    CHECK(na.allFinite());
  }

  TEST_CASE("asymmetric adjacency is rejected with the offending pair") {
    Matrix a = Matrix::Zero(3, 3);
    a(0, 2) = 1.0;
    try {
      symmetric_normalize(dense_network(a));
      FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("(0,2)") != std::string::npos);
    }
  }

  TEST_CASE("k-NN on 1-D points {0,1,10}") {
    Matrix x(3, 1);
    x << 0, 1, 10;
    const Network net = knn_graph(x, 1, Metric::euclidean);
    CHECK(edge_set(net) == brute_knn(x, 1));
    CHECK(edge_set(net) == std::set<std::pair<Index, Index>>{{0, 1}, {1, 2}});
  }

  TEST_CASE("k = n - 1 gives the complete graph") {
    std::mt19937_64 rng(3);
    const Matrix x = random_matrix(6, 3, rng);
    for (Metric m : {Metric::euclidean, Metric::cosine}) {
      CHECK(edge_set(knn_graph(x, 5, m)).size() == 15);
    }
  }

  TEST_CASE("two separated pairs with k = 1 give two disjoint edges") {
    Matrix x(4, 2);
    x << 0, 0, 0.1, 0, 50, 50, 50.2, 50;
    CHECK(edge_set(knn_graph(x, 1, Metric::euclidean)) == brute_knn(x, 1));
    CHECK(edge_set(knn_graph(x, 1, Metric::euclidean)) ==
          std::set<std::pair<Index, Index>>{{0, 1}, {2, 3}});
  }

  TEST_CASE("duplicate points break ties toward the lower index") {
    Matrix x(4, 1);
    x << 5, 5, 5, 5;
    const auto e = edge_set(knn_graph(x, 1, Metric::euclidean));
    // 0 -> 1, 1 -> 0, 2 -> 0, 3 -> 0
    CHECK(e == std::set<std::pair<Index, Index>>{{0, 1}, {0, 2}, {0, 3}});
  }

  TEST_CASE("k-NN rejects k >= n and non-finite features") {
    Matrix x = Matrix::Zero(3, 2);
    CHECK_THROWS_AS(knn_graph(x, 3, Metric::euclidean), ParameterError);
    CHECK_THROWS_AS(knn_graph(x, 0, Metric::euclidean), ParameterError);
    x(1, 1) = std::nan("");
    CHECK_THROWS_AS(knn_graph(x, 1, Metric::euclidean), ParameterError);
  }

  TEST_CASE("k-NN output is symmetric with zero diagonal and matches brute force") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 25; ++trial) {
      const Index n = 5 + trial % 13;
      const Matrix x = random_matrix(n, 1 + trial % 4, rng);
      const int k = 1 + trial % 4;
      const Network net = knn_graph(x, k, Metric::euclidean);
      const Matrix a = net.adjacency;
      CHECK((a - a.transpose()).cwiseAbs().maxCoeff() == 0.0);
      CHECK(a.diagonal().isZero(0.0));
      CHECK(edge_set(net) == brute_knn(x, k));
      CHECK_NOTHROW(net.validate());
      const Network cos = knn_graph(x, k, Metric::cosine);
      const Matrix c = cos.adjacency;
      CHECK((c - c.transpose()).cwiseAbs().maxCoeff() == 0.0);
      CHECK(c.diagonal().isZero(0.0));
    }
  }

  TEST_CASE("normalizing an already normalized regular graph is idempotent") {
    // A cycle is 2-regular; its weighted normalization is a uniform rescale,
    // so normalizing again reproduces it.
    const Index n = 6;
    Matrix a = Matrix::Zero(n, n);
    for (Index i = 0; i < n; ++i) a(i, (i + 1) % n) = a((i + 1) % n, i) = 1.0;
    const Matrix once = symmetric_normalize(dense_network(a)).norm_adjacency;
    const Matrix twice = symmetric_normalize(dense_network(once)).norm_adjacency;
    CHECK((once - twice).cwiseAbs().maxCoeff() < 1e-15);
  }

  TEST_CASE("spectral radius of normalized graphs stays within one") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 30; ++trial) {
      const Matrix a = erdos_renyi(3 + trial % 10, 0.4, rng);
      const NormalizedNetwork nn = symmetric_normalize(dense_network(a));
      CHECK(spectral_radius(nn.norm_adjacency) <= 1.0 + 1e-9);
      Eigen::SelfAdjointEigenSolver<Matrix> es(Matrix(nn.norm_adjacency));
      CHECK(es.eigenvalues().cwiseAbs().maxCoeff() <= 1.0 + 1e-12);
    }
  }

  TEST_CASE("identity network") {
    const Network n3 = identity_network(3, 3);
    CHECK(Matrix(symmetric_normalize(n3).norm_adjacency).isIdentity(0.0));
    const Network n1 = identity_network(1, 1);
    CHECK(Matrix(symmetric_normalize(n1).norm_adjacency) == Matrix::Ones(1, 1));
    const Network n2 = identity_network(2, 4);
    Matrix expect = Matrix::Zero(2, 4);
    expect(0, 0) = expect(1, 1) = 1.0;
    CHECK(n2.features == expect);
    CHECK(identity_features(4, 2) == Matrix::Identity(4, 2));
    CHECK_THROWS_AS(identity_network(0, 1), ParameterError);
  }

  TEST_CASE("triplet loading") {
    std::stringstream one("row,col,rating\n0,0,5.0\n");
    const PriorAssociation p = load_triplets(one, 1, 1, {1, 2, 3, 4, 5});
    CHECK(p.h(0, 0) == 5.0);
    CHECK(p.mask(0, 0) == 1.0);

    std::stringstream empty("row,col,rating\n");
    const PriorAssociation e = load_triplets(empty, 2, 3, {1, 2});
    CHECK(e.mask.isZero(0.0));
    CHECK(e.observed_count() == 0);

    std::stringstream dup("row,col,rating\n0,1,2\n0,1,4\n");
    std::ostringstream warn;
    const PriorAssociation d = load_triplets(dup, 1, 2, {1, 2, 3, 4, 5}, &warn);
    CHECK(d.h(0, 1) == 4.0);
    CHECK(!warn.str().empty());

    std::stringstream out_of_range("row,col,rating\n3,0,1\n");
    CHECK_THROWS_AS(load_triplets(out_of_range, 2, 2, {1}), ParseError);
    std::stringstream bad_class("row,col,rating\n0,0,7\n");
    CHECK_THROWS_AS(load_triplets(bad_class, 2, 2, {1, 2}), ParseError);
  }

  TEST_CASE("triplet density on a Flixster-sized matrix") {
    std::mt19937_64 rng(9);
    std::uniform_int_distribution<Index> idx(0, 2999);
    std::set<std::pair<Index, Index>> cells;
    while (cells.size() < 26173) cells.emplace(idx(rng), idx(rng));
    std::stringstream ss;
    ss << "row,col,rating\n";
    for (const auto& [i, j] : cells) ss << i << ',' << j << ",3\n";
    const PriorAssociation p = load_triplets(ss, 3000, 3000, {1, 2, 3, 4, 5});
    CHECK(p.observed_count() == 26173);
    CHECK(static_cast<double>(p.observed_count()) / 9e6 == doctest::Approx(0.0029).epsilon(0.01));
  }

  TEST_CASE("prior invariants") {
    PriorAssociation p;
    p.h = Matrix::Zero(2, 2);
    p.mask = Matrix::Zero(2, 2);
    p.classes = {1, 2};
    p.h(0, 0) = 2.0;
    CHECK_THROWS_AS(p.validate(), ValidationError);
    p.mask(0, 0) = 1.0;
    CHECK_NOTHROW(p.validate());
    p.h(0, 0) = 1.5;
    CHECK_THROWS_AS(p.validate(), ValidationError);
  }

  TEST_CASE("split sizes for 100000 observations") {
    PriorAssociation p;
    p.h = Matrix::Ones(400, 250);
    p.mask = Matrix::Ones(400, 250);
    p.classes = {1};
    const RatingSplit s = split_ratings(p, {0.8, 0.1, 0.1}, 42);
    CHECK(std::abs(s.train_mask.sum() - 80000) <= 1);
    CHECK(std::abs(s.val_mask.sum() - 10000) <= 1);
    CHECK(std::abs(s.test_mask.sum() - 10000) <= 1);
    CHECK_NOTHROW(s.validate(p));

    const RatingSplit all = split_ratings(p, {1.0, 0.0, 0.0}, 1);
    CHECK(all.train_mask == p.mask);

    const RatingSplit again = split_ratings(p, {0.8, 0.1, 0.1}, 42);
    CHECK(again.train_mask == s.train_mask);
    CHECK(again.test_mask == s.test_mask);
    CHECK_THROWS_AS(split_ratings(p, {0.8, 0.2, 0.1}, 1), ParameterError);
  }

  TEST_CASE("split masks are disjoint and inside the observations for every seed") {
    std::mt19937_64 rng(2);
    PriorAssociation p;
    p.mask = random_binary(30, 20, 0.3, rng);
    p.h = p.mask;
    p.classes = {1};
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
      const RatingSplit s = split_ratings(p, {0.7, 0.1, 0.2}, seed);
      const Matrix total = s.train_mask + s.val_mask + s.test_mask;
      CHECK((total.array() <= p.mask.array()).all());
      CHECK_NOTHROW(s.validate(p));
    }
  }

  TEST_CASE("explicit test pairs") {
    PriorAssociation p;
    p.mask = Matrix::Ones(3, 3);
    p.h = p.mask;
    p.classes = {1};
    std::stringstream pairs("row,col\n0,0\n2,1\n");
    const RatingSplit s = split_from_test_pairs(p, pairs, 0.0, 1);
    CHECK(s.test_mask.sum() == 2.0);
    CHECK(s.test_mask(2, 1) == 1.0);
    CHECK(s.train_mask.sum() == 7.0);

    p.mask(1, 1) = 0.0;
    p.h(1, 1) = 0.0;
    std::stringstream bad("row,col\n1,1\n");
    CHECK_THROWS_AS(split_from_test_pairs(p, bad, 0.0, 1), ValidationError);
  }

  TEST_CASE("empty MovieLens files are an integrity error") {
    const auto dir = std::filesystem::temp_directory_path() / "symgnn_empty_ml";
    std::filesystem::create_directories(dir);
    for (const char* f : {"u.data", "u.user", "u.item"}) std::ofstream(dir / f).close();
    CHECK_THROWS_AS(load_movielens_100k(dir), IntegrityError);
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("MovieLens-100K counts" * doctest::skip(!std::filesystem::exists(ml100k_dir() / "u.data"))) {
    const Dataset ds = load_movielens_100k(ml100k_dir());
    CHECK(ds.prior.rows() == 943);
    CHECK(ds.prior.cols() == 1682);
    CHECK(ds.prior.observed_count() == 100000);
    CHECK(ds.prior.classes == std::vector<double>{1, 2, 3, 4, 5});
    CHECK(100000.0 / (943.0 * 1682.0) == doctest::Approx(0.0630).epsilon(0.001));
    CHECK_NOTHROW(ds.users.validate());
    CHECK_NOTHROW(ds.items.validate());
    CHECK(spectral_radius(symmetric_normalize(ds.users).norm_adjacency) <= 1.0 + 1e-9);
    CHECK(spectral_radius(symmetric_normalize(ds.items).norm_adjacency) <= 1.0 + 1e-9);
  }

  TEST_CASE("synthetic data shape, density and determinism") {
    SyntheticOptions o;
    const Dataset ds = make_synthetic(o);
    CHECK(ds.prior.rows() == 200);
    CHECK(ds.prior.cols() == 150);
    CHECK(ds.prior.observed_count() == doctest::Approx(0.3 * 200 * 150).epsilon(0.05));
    CHECK_NOTHROW(ds.prior.validate());
    CHECK_NOTHROW(ds.users.validate());
    const Dataset again = make_synthetic(o);
    CHECK(again.prior.h == ds.prior.h);
  }
}
