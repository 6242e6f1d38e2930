#include "symgnn/ops.hpp"

#include <cmath>
#include <memory>
#include <string>

namespace symgnn::ad {
namespace {

void require_same_tape(Var a, Var b) {
  if (&a.tape() != &b.tape()) throw std::logic_error("operands live on different tapes");
}

[[noreturn]] void shape_mismatch(std::string_view op, const Matrix& a, const Matrix& b) {
  throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " + shape_str(b));
}

void require_same_shape(std::string_view op, Var a, Var b) {
  require_same_tape(a, b);
  if (a.rows() != b.rows() || a.cols() != b.cols()) shape_mismatch(op, a.value(), b.value());
}

void require_scalar(std::string_view op, Var a) {
  if (a.value().size() != 1) {
    throw ShapeError(std::string(op) + ": expected 1x1, got " + shape_str(a.value()));
  }
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix p = logits;
  for (Index i = 0; i < p.rows(); ++i) {
    const double m = p.row(i).maxCoeff();
    p.row(i) = (p.row(i).array() - m).exp().matrix();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

}  // namespace

Activation parse_activation(std::string_view name) {
  if (name == "linear") return Activation::linear;
  if (name == "relu") return Activation::relu;
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "tanh") return Activation::tanh;
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

std::string_view activation_name(Activation a) {
  switch (a) {
    case Activation::linear: return "linear";
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::tanh: return "tanh";
  }
  return "?";
}

Matrix apply_activation(const Matrix& x, Activation a) {
  switch (a) {
    case Activation::linear: return x;
    case Activation::relu: return x.cwiseMax(0.0);
    case Activation::sigmoid: return (1.0 / (1.0 + (-x.array()).exp())).matrix();
    case Activation::tanh: return x.array().tanh().matrix();
  }
  return x;
}

Var matmul(Var a, Var b) {
  require_same_tape(a, b);
  if (a.cols() != b.rows()) shape_mismatch("matmul", a.value(), b.value());
  Matrix out = a.value() * b.value();
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, const Matrix&, const Matrix& g) {
    if (t.requires_grad(a)) t.accumulate(a, g * b.value().transpose());
    if (t.requires_grad(b)) t.accumulate(b, a.value().transpose() * g);
  });
}

Var add(Var a, Var b) {
  require_same_shape("add", a, b);
  return a.tape().record(a.value() + b.value(), {a, b}, [a, b](Tape& t, const Matrix&, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

Var sub(Var a, Var b) {
  require_same_shape("sub", a, b);
  return a.tape().record(a.value() - b.value(), {a, b}, [a, b](Tape& t, const Matrix&, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, -g);
  });
}

Var hadamard(Var a, Var b) {
  require_same_shape("hadamard", a, b);
  return a.tape().record(a.value().cwiseProduct(b.value()), {a, b},
                         [a, b](Tape& t, const Matrix&, const Matrix& g) {
                           if (t.requires_grad(a)) t.accumulate(a, g.cwiseProduct(b.value()));
                           if (t.requires_grad(b)) t.accumulate(b, g.cwiseProduct(a.value()));
                         });
}

Var transpose(Var a) {
  return a.tape().record(a.value().transpose(), {a},
                         [a](Tape& t, const Matrix&, const Matrix& g) { t.accumulate(a, g.transpose()); });
}

Var scale(Var a, double s) {
  return a.tape().record(a.value() * s, {a},
                         [a, s](Tape& t, const Matrix&, const Matrix& g) { t.accumulate(a, g * s); });
}

Var shift(Var a, double s) {
  return a.tape().record((a.value().array() + s).matrix(), {a},
                         [a](Tape& t, const Matrix&, const Matrix& g) { t.accumulate(a, g); });
}

Var activation(Var x, Activation kind) {
  return x.tape().record(apply_activation(x.value(), kind), {x},
                         [x, kind](Tape& t, const Matrix& y, const Matrix& g) {
                           switch (kind) {
                             case Activation::relu:
                               t.accumulate(x, (y.array() > 0.0).select(g, 0.0));
                               break;
                             case Activation::sigmoid:
                               t.accumulate(x, (g.array() * y.array() * (1.0 - y.array())).matrix());
                               break;
                             case Activation::tanh:
                               t.accumulate(x, (g.array() * (1.0 - y.array().square())).matrix());
                               break;
                             case Activation::linear:
                               t.accumulate(x, g);
                               break;
                           }
                         });
}

Var row_softmax_gram(Var u, Var v) {
  require_same_tape(u, v);
  if (u.cols() != v.cols()) shape_mismatch("row_softmax_gram", u.value(), v.value());
  Matrix p = softmax_rows(u.value() * v.value().transpose());
  return u.tape().record(std::move(p), {u, v}, [u, v](Tape& t, const Matrix& pv, const Matrix& g) {
    // d logits = P .* (G - rowsum(G .* P) 1^T)
    Matrix ds = g.cwiseProduct(pv);
    const Vector row_dot = ds.rowwise().sum();
    ds.noalias() -= row_dot.asDiagonal() * pv;
    if (t.requires_grad(u)) t.accumulate(u, ds * v.value());
    if (t.requires_grad(v)) t.accumulate(v, ds.transpose() * u.value());
  });
}

Var masked_mse(Var pred, const Matrix& h, const Matrix& mask, double normalizer) {
  const Matrix& pv = pred.value();
  if (h.rows() != pv.rows() || h.cols() != pv.cols()) shape_mismatch("masked_mse", pv, h);
  if (mask.rows() != pv.rows() || mask.cols() != pv.cols()) shape_mismatch("masked_mse", pv, mask);
  if (!((mask.array() == 0.0) || (mask.array() == 1.0)).all()) {
    throw ValidationError("masked_mse: mask must be binary");
  }
  if (!(normalizer > 0.0)) throw ParameterError("masked_mse: normalizer must be positive");
  Matrix resid = mask.cwiseProduct(h - pv);
  Matrix out(1, 1);
  out(0, 0) = resid.squaredNorm() / normalizer;
  return pred.tape().record(std::move(out), {pred},
                            [pred, resid = std::move(resid), normalizer](Tape& t, const Matrix&, const Matrix& g) {
                              t.accumulate(pred, resid * (-2.0 * g(0, 0) / normalizer));
                            });
}

Var entry_mse(Var pred, const Vector& target, double normalizer) {
  const Matrix& pv = pred.value();
  if (pv.cols() != 1 || pv.rows() != target.size()) {
    shape_mismatch("entry_mse", pv, Matrix(target.size(), 1));
  }
  if (!(normalizer > 0.0)) throw ParameterError("entry_mse: normalizer must be positive");
  Vector resid = pv.col(0) - target;
  Matrix out(1, 1);
  out(0, 0) = resid.squaredNorm() / normalizer;
  return pred.tape().record(std::move(out), {pred},
                            [pred, resid = std::move(resid), normalizer](Tape& t, const Matrix&, const Matrix& g) {
                              t.accumulate(pred, resid * (2.0 * g(0, 0) / normalizer));
                            });
}

Var sum(Var a) {
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  const Index r = a.rows(), c = a.cols();
  return a.tape().record(std::move(out), {a}, [a, r, c](Tape& t, const Matrix&, const Matrix& g) {
    t.accumulate(a, Matrix::Constant(r, c, g(0, 0)));
  });
}

Var spmm(const SparseMatrix& a, Var x) {
  if (a.cols() != x.rows()) shape_mismatch("spmm", Matrix(a.rows(), a.cols()), x.value());
  const SparseMatrix* ap = &a;
  return x.tape().record(a * x.value(), {x}, [ap, x](Tape& t, const Matrix&, const Matrix& g) {
    t.accumulate(x, ap->transpose() * g);
  });
}

Var spmm(SparseMatrix&& a, Var x) {
  if (a.cols() != x.rows()) shape_mismatch("spmm", Matrix(a.rows(), a.cols()), x.value());
  auto owned = std::make_shared<const SparseMatrix>(std::move(a));
  return x.tape().record(*owned * x.value(), {x}, [owned, x](Tape& t, const Matrix&, const Matrix& g) {
    t.accumulate(x, owned->transpose() * g);
  });
}

Var row_scale(Var v, Var x) {
  require_same_tape(v, x);
  if (v.cols() != 1 || v.rows() != x.rows()) shape_mismatch("row_scale", v.value(), x.value());
  Matrix out = v.value().col(0).asDiagonal() * x.value();
  return x.tape().record(std::move(out), {v, x}, [v, x](Tape& t, const Matrix&, const Matrix& g) {
    if (t.requires_grad(v)) t.accumulate(v, g.cwiseProduct(x.value()).rowwise().sum());
    if (t.requires_grad(x)) t.accumulate(x, v.value().col(0).asDiagonal() * g);
  });
}

Var add_row_bias(Var x, Var b) {
  require_same_tape(x, b);
  if (b.rows() != 1 || b.cols() != x.cols()) shape_mismatch("add_row_bias", x.value(), b.value());
  Matrix out = x.value().rowwise() + b.value().row(0);
  return x.tape().record(std::move(out), {x, b}, [x, b](Tape& t, const Matrix&, const Matrix& g) {
    t.accumulate(x, g);
    if (t.requires_grad(b)) t.accumulate(b, g.colwise().sum());
  });
}

Var scalar_affine(Var x, Var s, Var b) {
  require_same_tape(x, s);
  require_same_tape(x, b);
  require_scalar("scalar_affine", s);
  require_scalar("scalar_affine", b);
  Matrix out = (x.value() * s.item()).array() + b.item();
  return x.tape().record(std::move(out), {x, s, b}, [x, s, b](Tape& t, const Matrix&, const Matrix& g) {
    if (t.requires_grad(x)) t.accumulate(x, g * s.item());
    if (t.requires_grad(s)) t.accumulate(s, Matrix::Constant(1, 1, g.cwiseProduct(x.value()).sum()));
    if (t.requires_grad(b)) t.accumulate(b, Matrix::Constant(1, 1, g.sum()));
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no operands");
  const Index rows = parts.front().rows();
  Index cols = 0;
  for (const Var& p : parts) {
    require_same_tape(parts.front(), p);
    if (p.rows() != rows) shape_mismatch("concat_cols", parts.front().value(), p.value());
    cols += p.cols();
  }
  Matrix out(rows, cols);
  Index offset = 0;
  for (const Var& p : parts) {
    out.middleCols(offset, p.cols()) = p.value();
    offset += p.cols();
  }
  return parts.front().tape().record(std::move(out), parts,
                                     [parts](Tape& t, const Matrix&, const Matrix& g) {
                                       Index off = 0;
                                       for (const Var& p : parts) {
                                         if (t.requires_grad(p)) {
                                           t.accumulate(p, g.middleCols(off, p.cols()));
                                         }
                                         off += p.cols();
                                       }
                                     });
}

Var select_rows(Var x, const std::vector<Index>& rows) {
  const Matrix& xv = x.value();
  Matrix out(static_cast<Index>(rows.size()), xv.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] < 0 || rows[r] >= xv.rows()) {
      throw ShapeError("select_rows: row " + std::to_string(rows[r]) + " out of range for " +
                       shape_str(xv));
    }
    out.row(static_cast<Index>(r)) = xv.row(rows[r]);
  }
  const Index n = xv.rows();
  return x.tape().record(std::move(out), {x}, [x, rows, n](Tape& t, const Matrix&, const Matrix& g) {
    Matrix full = Matrix::Zero(n, g.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) full.row(rows[r]) += g.row(static_cast<Index>(r));
    t.accumulate(x, full);
  });
}

Var column(Var x, Index k) {
  if (k < 0 || k >= x.cols()) {
    throw ShapeError("column: index " + std::to_string(k) + " out of range for " + shape_str(x.value()));
  }
  const Index rows = x.rows(), cols = x.cols();
  return x.tape().record(x.value().col(k), {x}, [x, k, rows, cols](Tape& t, const Matrix&, const Matrix& g) {
    Matrix full = Matrix::Zero(rows, cols);
    full.col(k) = g.col(0);
    t.accumulate(x, full);
  });
}

Var pair_dot(Var u, Var v, const std::vector<Index>& rows, const std::vector<Index>& cols) {
  require_same_tape(u, v);
  if (u.cols() != v.cols()) shape_mismatch("pair_dot", u.value(), v.value());
  if (rows.size() != cols.size()) throw ShapeError("pair_dot: index lists differ in length");
  const Matrix& uv = u.value();
  const Matrix& vv = v.value();
  Matrix out(static_cast<Index>(rows.size()), 1);
  for (std::size_t e = 0; e < rows.size(); ++e) {
    if (rows[e] < 0 || rows[e] >= uv.rows() || cols[e] < 0 || cols[e] >= vv.rows()) {
      throw ShapeError("pair_dot: index pair out of range");
    }
    out(static_cast<Index>(e), 0) = uv.row(rows[e]).dot(vv.row(cols[e]));
  }
  return u.tape().record(std::move(out), {u, v}, [u, v, rows, cols](Tape& t, const Matrix&, const Matrix& g) {
    const Matrix& uv = u.value();
    const Matrix& vv = v.value();
    if (t.requires_grad(u)) {
      Matrix gu = Matrix::Zero(uv.rows(), uv.cols());
      for (std::size_t e = 0; e < rows.size(); ++e) {
        gu.row(rows[e]) += g(static_cast<Index>(e), 0) * vv.row(cols[e]);
      }
      t.accumulate(u, gu);
    }
    if (t.requires_grad(v)) {
      Matrix gv = Matrix::Zero(vv.rows(), vv.cols());
      for (std::size_t e = 0; e < rows.size(); ++e) {
        gv.row(cols[e]) += g(static_cast<Index>(e), 0) * uv.row(rows[e]);
      }
      t.accumulate(v, gv);
    }
  });
}

}  // namespace symgnn::ad
