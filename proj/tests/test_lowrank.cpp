#include "doctest.h"
#include "support.hpp"

#include "symgnn/lowrank_model.hpp"
#include "symgnn/train.hpp"

#include <algorithm>
#include <numeric>
#include <random>

using namespace symgnn;
using namespace symgnn::testing;
using ad::Activation;
using ad::Tape;
using ad::Var;

namespace {

Matrix path_graph(Index n) {
  Matrix a = Matrix::Zero(n, n);
  for (Index i = 0; i + 1 < n; ++i) a(i, i + 1) = a(i + 1, i) = 1.0;
  return a;
}

Dataset rated_dataset(std::mt19937_64& rng, Index n1, Index n2, Index d, double density = 0.6) {
  Dataset ds;
  ds.users = dense_network(erdos_renyi(n1, 0.4, rng), d);
  ds.items = dense_network(erdos_renyi(n2, 0.4, rng), d);
  ds.users.features = random_matrix(n1, d, rng);
  ds.items.features = random_matrix(n2, d, rng);
  ds.prior.classes = {1, 2, 3, 4, 5};
  ds.prior.mask = random_binary(n1, n2, density, rng);
  ds.prior.mask(0, 0) = 1.0;
  std::uniform_int_distribution<int> r(1, 5);
  ds.prior.h = Matrix::Zero(n1, n2);
  for (Index i = 0; i < n1; ++i) {
    for (Index j = 0; j < n2; ++j) {
      if (ds.prior.mask(i, j) != 0.0) ds.prior.h(i, j) = r(rng);
    }
  }
  return ds;
}

// Per-class masked products computed with explicit loops.
Matrix brute_class_prior(const Matrix& h, const Matrix& mask, const std::vector<double>& classes,
                         const Matrix& u_other, const std::vector<Matrix>& thetas, const Matrix& w,
                         const Matrix& b, bool normalize) {
  const Index n = h.rows();
  const Index r = u_other.cols();
  Matrix cat = Matrix::Zero(n, r * static_cast<Index>(classes.size()));
  for (std::size_t c = 0; c < classes.size(); ++c) {
    Matrix agg = Matrix::Zero(n, r);
    for (Index i = 0; i < n; ++i) {
      double count = 0.0;
      for (Index j = 0; j < h.cols(); ++j) count += mask(i, j);
      for (Index j = 0; j < h.cols(); ++j) {
        if (mask(i, j) != 0.0 && h(i, j) == classes[c]) {
          agg.row(i) += u_other.row(j) / (normalize && count > 0 ? count : 1.0);
        }
      }
    }
    cat.middleCols(static_cast<Index>(c) * r, r) = relu(agg * thetas[c]);
  }
  Matrix out = cat * w;
  out.rowwise() += b.row(0);
  return out;
}

}  // namespace

TEST_SUITE("symgnn_lowrank") {
  TEST_CASE("cge embedding") {
    std::mt19937_64 rng(1);
    const SparseMatrix a = to_sparse(dense_normalize(path_graph(3)));
    const Matrix u0 = random_matrix(3, 2, rng);
    {
      Tape t;
      const Var u = cge_embed(a, t.constant(Matrix::Ones(3, 1)), t.constant(u0),
                              {t.constant(Matrix::Identity(2, 2))}, Activation::linear);
      CHECK(u.value() == u0);
    }
    {
      Tape t;
      const Var u = cge_embed(a, t.constant(Matrix::Constant(3, 1, 0.3)), t.constant(Matrix::Zero(3, 2)),
                              {t.constant(random_matrix(2, 2, rng)), t.constant(random_matrix(2, 2, rng))},
                              Activation::relu);
      CHECK(u.value().isZero(0.0));
    }
    {
      const Vector s = random_matrix(3, 1, rng, 0.0, 1.0);
      const Matrix w1 = random_matrix(2, 2, rng);
      const Matrix w2 = random_matrix(2, 2, rng);
      Tape t;
      const Var u = cge_embed(a, t.constant(Matrix(s)), t.constant(u0), {t.constant(w1), t.constant(w2)},
                              Activation::tanh);
      const Matrix hat = dense_cge(Matrix(a), s);
      const Matrix step1 = (hat * u0 * w1).array().tanh().matrix();
      const Matrix step2 = (hat * step1 * w2).array().tanh().matrix();
      CHECK((u.value() - step2).cwiseAbs().maxCoeff() < 1e-15);
    }
  }

  TEST_CASE("attention embedding") {
    std::mt19937_64 rng(2);
    {
      Tape t;
      const Matrix u = random_matrix(1, 3, rng);
      const Matrix w = random_matrix(3, 3, rng);
      CHECK((attention_embed(t.constant(u), t.constant(w), Activation::relu).value() - relu(u * w))
                .cwiseAbs()
                .maxCoeff() < 1e-15);
    }
    {
      Tape t;
      const Var out = attention_embed(t.constant(Matrix::Constant(4, 2, -0.3)),
                                      t.constant(random_matrix(2, 2, rng)), Activation::linear);
      for (Index i = 1; i < 4; ++i) CHECK((out.value().row(i) - out.value().row(0)).norm() < 1e-15);
    }
    {
      Tape t;
      const Matrix u = random_matrix(4, 2, rng);
      const Matrix w = random_matrix(2, 2, rng);
      const Matrix ref = relu(naive_softmax_gram(u, u) * u * w);
      CHECK((attention_embed(t.constant(u), t.constant(w), Activation::relu).value() - ref).cwiseAbs().maxCoeff() <
            1e-15);
    }
  }

  TEST_CASE("class prior embedding") {
    std::mt19937_64 rng(3);
    {
      // nothing observed: every class aggregate is zero, output is the bias
      const std::vector<SparseMatrix> empty(2, SparseMatrix(3, 4));
      Tape t;
      const Matrix b = random_matrix(1, 2, rng);
      const Var out = class_prior_embed(empty, t.constant(random_matrix(4, 2, rng)),
                                        {t.constant(random_matrix(2, 2, rng)), t.constant(random_matrix(2, 2, rng))},
                                        t.constant(random_matrix(4, 2, rng)), t.constant(b), Activation::relu);
      for (Index i = 0; i < 3; ++i) CHECK(out.value().row(i) == b);
    }
    {
      // one class routed through the identity
      const std::vector<SparseMatrix> id{to_sparse(Matrix::Identity(3, 3))};
      const Matrix u = random_matrix(3, 2, rng);
      Tape t;
      const Var out = class_prior_embed(id, t.constant(u), {t.constant(Matrix::Identity(2, 2))},
                                        t.constant(Matrix::Identity(2, 2)), t.constant(Matrix::Zero(1, 2)),
                                        Activation::linear);
      CHECK(out.value() == u);
    }
    {
      Matrix h(3, 3);
      h << 1, 0, 2, 2, 2, 0, 0, 1, 1;
      const Matrix mask = (h.array() != 0.0).cast<double>();
      const std::vector<double> classes{1, 2};
      const Matrix u = random_matrix(3, 2, rng);
      const std::vector<Matrix> thetas{random_matrix(2, 2, rng), random_matrix(2, 2, rng)};
      const Matrix w = random_matrix(4, 2, rng);
      const Matrix b = random_matrix(1, 2, rng);
      for (bool normalize : {false, true}) {
        auto ind = class_indicators(h, mask, classes);
        if (normalize) normalize_rows_jointly(ind);
        Tape t;
        const Var out = class_prior_embed(ind, t.constant(u), {t.constant(thetas[0]), t.constant(thetas[1])},
                                          t.constant(w), t.constant(b), Activation::relu);
        const Matrix ref = brute_class_prior(h, mask, classes, u, thetas, w, b, normalize);
        CHECK((out.value() - ref).cwiseAbs().maxCoeff() < 1e-14);
      }
    }
  }

  TEST_CASE("class indicators partition the observations") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 10; ++trial) {
      const Dataset ds = rated_dataset(rng, 7, 9, 2, 0.5);
      const auto ind = class_indicators(ds.prior.h, ds.prior.mask, ds.prior.classes);
      CHECK(ind.size() == 5);
      Matrix total = Matrix::Zero(7, 9);
      for (const auto& m : ind) total += Matrix(m);
      CHECK(total == ds.prior.mask);
    }
    Matrix bad = Matrix::Ones(1, 1) * 7.0;
    CHECK_THROWS_AS(class_indicators(bad, Matrix::Ones(1, 1), {1, 2}), ValidationError);
  }

  TEST_CASE("cross-attention embedding") {
    std::mt19937_64 rng(5);
    {
      Tape t;
      const Matrix other = random_matrix(1, 2, rng);
      const Matrix theta = random_matrix(2, 2, rng);
      const Var out = cross_attention_embed(t.constant(random_matrix(3, 2, rng)), t.constant(other),
                                            t.constant(theta), Activation::relu);
      for (Index i = 0; i < 3; ++i) CHECK((out.value().row(i) - relu(other * theta)).norm() < 1e-15);
    }
    {
      Matrix self = Matrix::Zero(2, 4);
      self(0, 0) = 1.0;
      self(1, 1) = -2.0;
      Matrix other = Matrix::Zero(3, 4);
      other(0, 2) = 1.5;
      other(1, 3) = 1.0;
      other(2, 2) = 0.5;
      const Matrix theta = random_matrix(4, 4, rng);
      Tape t;
      const Var out = cross_attention_embed(t.constant(self), t.constant(other), t.constant(theta),
                                            Activation::linear);
      const Matrix mean_row = other.colwise().mean() * theta;
      for (Index i = 0; i < 2; ++i) CHECK((out.value().row(i) - mean_row).norm() < 1e-15);
    }
    {
      const Matrix self = random_matrix(3, 4, rng);
      const Matrix other = random_matrix(5, 4, rng);
      const Matrix theta = random_matrix(4, 4, rng);
      Tape t;
      const Var out = cross_attention_embed(t.constant(self), t.constant(other), t.constant(theta),
                                            Activation::relu);
      CHECK((out.value() - relu(naive_softmax_gram(self, other) * other * theta)).cwiseAbs().maxCoeff() < 1e-15);
    }
  }

  TEST_CASE("no branches leaves the encoder dot product") {
    std::mt19937_64 rng(6);
    const Dataset ds = rated_dataset(rng, 4, 5, 3);
    ModelConfig cfg = default_config(ModelKind::lowrank);
    cfg.hidden_dim = 3;
    cfg.use_cge = cfg.use_attention = cfg.use_prior = cfg.use_cross = false;
    cfg.affine_output = false;
    const ModelInputs in = make_model_inputs(ds, ds.prior.mask, cfg);
    LowRankModel m(in, cfg);
    Tape t;
    const Var h1 = m.side1.encoder.forward(t, m.params(), t.constant(in.g1.features));
    const Var h2 = m.side2.encoder.forward(t, m.params(), t.constant(in.g2.features));
    const Matrix expect = h1.value() * h2.value().transpose();
    CHECK((m.predict_raw() - expect).cwiseAbs().maxCoeff() < 1e-14);
  }

  TEST_CASE("identity embeddings give an identity prediction") {
    Dataset ds;
    ds.users = dense_network(Matrix::Zero(3, 3), 3);
    ds.items = dense_network(Matrix::Zero(3, 3), 3);
    ds.users.features = Matrix::Identity(3, 3);
    ds.items.features = Matrix::Identity(3, 3);
    ds.prior.classes = {1};
    ds.prior.mask = Matrix::Identity(3, 3);
    ds.prior.h = Matrix::Identity(3, 3);
    ModelConfig cfg = default_config(ModelKind::lowrank);
    cfg.hidden_dim = 3;
    cfg.encoder_depth = 1;
    cfg.use_cge = cfg.use_attention = cfg.use_prior = cfg.use_cross = false;
    cfg.affine_output = false;
    const ModelInputs in = make_model_inputs(ds, ds.prior.mask, cfg);
    LowRankModel m(in, cfg);
    m.params()[m.side1.encoder.layers[0].weight].value = Matrix::Identity(3, 3);
    m.params()[m.side2.encoder.layers[0].weight].value = Matrix::Identity(3, 3);
    m.params()[m.side1.encoder.layers[0].bias].value.setZero();
    m.params()[m.side2.encoder.layers[0].bias].value.setZero();
    CHECK(m.predict_raw() == Matrix::Identity(3, 3));
  }

  TEST_CASE("prediction rank is bounded by the embedding width") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      std::mt19937_64 rng(seed);
      const Dataset ds = rated_dataset(rng, 20, 15, 4, 0.4);
      ModelConfig cfg = default_config(ModelKind::lowrank);
      cfg.hidden_dim = 3;
      cfg.seed = seed;
      const ModelInputs in = make_model_inputs(ds, ds.prior.mask, cfg);
      LowRankModel m(in, cfg);
      for (auto& p : m.params()) p.value += random_matrix(p.value.rows(), p.value.cols(), rng, -0.3, 0.3);
      const double scale = m.params()[m.out_scale].value(0, 0);
      const double bias = m.params()[m.out_bias].value(0, 0);
      const Matrix raw = ((m.predict_raw().array() - bias) / scale).matrix();
      Eigen::JacobiSVD<Matrix> svd(raw);
      const Vector sv = svd.singularValues();
      CHECK(sv(0) > 1e-3);
      for (Index k = 3; k < sv.size(); ++k) CHECK(sv(k) < 1e-10);
    }
  }

  TEST_CASE("attention-free variant never holds an n x n activation") {
    std::mt19937_64 rng(7);
    const Dataset ds = rated_dataset(rng, 60, 50, 4, 0.3);
    ModelConfig cfg = default_config(ModelKind::lowrank);
    cfg.hidden_dim = 5;
    ModelConfig g = ablation_variant(cfg, "G");
    const ModelInputs in = make_model_inputs(ds, ds.prior.mask, g);
    LowRankModel mg(in, g);
    Tape tg;
    tg.backward(mg.batch_loss(tg, all_rows(60), static_cast<double>(in.train_count)));
    const ad::TapeStats sg = tg.stats();
    // widest node is the class concatenation, n x (5 classes * r)
    CHECK(sg.largest_min_dim <= 25);

    const ModelInputs fin = make_model_inputs(ds, ds.prior.mask, cfg);
    LowRankModel mf(fin, cfg);
    Tape tf;
    tf.backward(mf.batch_loss(tf, all_rows(60), static_cast<double>(fin.train_count)));
    CHECK(tf.stats().largest_min_dim >= 50);
    CHECK(sg.activation_elements < tf.stats().activation_elements);
  }

  TEST_CASE("permuting users permutes user embeddings") {
    std::mt19937_64 rng(8);
    const Dataset ds = rated_dataset(rng, 5, 4, 3);
    std::vector<int> perm(5);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Eigen::PermutationMatrix<Eigen::Dynamic> pm(5);
    for (int i = 0; i < 5; ++i) pm.indices()(i) = perm[static_cast<std::size_t>(i)];
    Dataset pds = ds;
    pds.users.adjacency = to_sparse(pm * Matrix(ds.users.adjacency) * pm.transpose());
    pds.users.features = pm * ds.users.features;
    pds.prior.h = pm * ds.prior.h;
    pds.prior.mask = pm * ds.prior.mask;
    ModelConfig cfg = default_config(ModelKind::lowrank);
    cfg.hidden_dim = 3;
    const ModelInputs in = make_model_inputs(ds, ds.prior.mask, cfg);
    const ModelInputs pin = make_model_inputs(pds, pds.prior.mask, cfg);
    LowRankModel m(in, cfg);
    LowRankModel pmod(pin, cfg);
    m.params()[m.side1.sigma].value = random_matrix(5, 1, rng);
    pmod.params()[pmod.side1.sigma].value = pm * m.params()[m.side1.sigma].value;
    Tape t1, t2;
    const auto [u1, u2] = m.embed(t1);
    const auto [pu1, pu2] = pmod.embed(t2);
    CHECK((pu1.value() - pm * u1.value()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((pu2.value() - u2.value()).cwiseAbs().maxCoeff() < 1e-12);
  }

  TEST_CASE("low-rank gradients pass finite differences from 4x5 to 6x7") {
    for (const auto& [n1, n2] : std::vector<std::pair<Index, Index>>{{4, 5}, {5, 6}, {6, 7}}) {
      CAPTURE(n1);
      const DataBundle b = make_small_instance(n1, n2, 4);
      const ad::GradCheckReport rep = model_gradcheck(b, gradcheck_config(ModelKind::lowrank), 1e-6, 1e-4);
      for (const auto& e : rep.entries) {
        CAPTURE(e.name);
        CHECK(e.max_rel_error < 1e-4);
      }
    }
  }

  TEST_CASE("batch loss over a row partition sums to the full loss") {
    std::mt19937_64 rng(9);
    const Dataset ds = rated_dataset(rng, 9, 6, 3, 0.5);
    ModelConfig cfg = default_config(ModelKind::lowrank);
    cfg.hidden_dim = 4;
    const ModelInputs in = make_model_inputs(ds, ds.prior.mask, cfg);
    LowRankModel m(in, cfg);
    const double norm = static_cast<double>(in.train_count);
    Tape full;
    const double whole = m.batch_loss(full, all_rows(9), norm).item();
    double parts = 0.0;
    for (const std::vector<Index>& rows : {std::vector<Index>{0, 4, 8}, {1, 2}, {3, 5, 6, 7}}) {
      Tape t;
      parts += m.batch_loss(t, rows, norm).item();
    }
    CHECK(std::abs(whole - parts) < 1e-12);
    // the same loss through the dense row forward
    Tape t;
    const double dense = ad::masked_mse(m.forward_rows(t, all_rows(9)), in.h_train, in.train_mask, norm).item();
    CHECK(std::abs(whole - dense) < 1e-12);
  }
}
