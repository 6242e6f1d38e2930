#pragma once

// Differentiable operations recorded on a Tape. Every op checks shapes eagerly
// and throws ShapeError naming both operands.

#include "symgnn/common.hpp"
#include "symgnn/tape.hpp"

#include <string_view>
#include <vector>

namespace symgnn::ad {

enum class Activation { linear, relu, sigmoid, tanh };

Activation parse_activation(std::string_view name);
std::string_view activation_name(Activation a);
// Plain (non-recorded) elementwise application, for reference computations.
Matrix apply_activation(const Matrix& x, Activation a);

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var hadamard(Var a, Var b);
Var transpose(Var a);
Var scale(Var a, double s);
// a + s elementwise.
Var shift(Var a, double s);
Var activation(Var x, Activation kind);

// out(i,j) = exp(<u_i, v_j>) / sum_k exp(<u_i, v_k>), stabilized by
// subtracting the row maximum of the logits.
Var row_softmax_gram(Var u, Var v);

// sum(mask .* (h - pred)^2) / normalizer. The mask must be 0/1.
Var masked_mse(Var pred, const Matrix& h, const Matrix& mask, double normalizer = 1.0);

// sum((pred - target)^2) / normalizer for a column of predicted entries.
Var entry_mse(Var pred, const Vector& target, double normalizer = 1.0);

// Sum of all entries (1x1).
Var sum(Var a);

// Constant sparse matrix times node. The lvalue overload keeps a pointer, so
// the matrix must outlive the tape; the rvalue overload takes ownership.
Var spmm(const SparseMatrix& a, Var x);
Var spmm(SparseMatrix&& a, Var x);

// diag(v) * x for a column vector v (n x 1) and x (n x c).
Var row_scale(Var v, Var x);

// x + 1 * b for a row vector b (1 x c).
Var add_row_bias(Var x, Var b);

// s * x + t for learnable scalars s, t (both 1x1).
Var scalar_affine(Var x, Var s, Var t);

Var concat_cols(const std::vector<Var>& parts);
Var select_rows(Var x, const std::vector<Index>& rows);
Var column(Var x, Index k);

// out(e) = <u.row(rows[e]), v.row(cols[e])> as an m x 1 column.
Var pair_dot(Var u, Var v, const std::vector<Index>& rows, const std::vector<Index>& cols);

}  // namespace symgnn::ad
