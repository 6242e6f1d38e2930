#pragma once

// Classic multi-network Sylvester equation
//   X = alpha * A1 X A2^T + (1 - alpha) * H
// with X and H of shape n1 x n2 (A1 acts on rows, A2 on columns).

#include "symgnn/common.hpp"

#include <iosfwd>
#include <vector>

namespace symgnn {

struct SolverConfig {
  double alpha = 0.5;
  double tol = 1e-9;
  int max_iter = 10000;

  void validate() const;
};

struct SolutionX {
  Matrix x;
  int iterations = 0;
  double final_residual = 0.0;
  bool converged = false;
  // ||X^{t+1} - X^t||_F per iteration.
  std::vector<double> residuals;
};

// Fixed-point iteration from X^0 = H until the successive-iterate Frobenius
// difference drops to cfg.tol. Returns the last iterate with converged=false
// when max_iter is reached.
SolutionX fixed_point_solve(const SparseMatrix& a1, const SparseMatrix& a2, const Matrix& h,
                            const SolverConfig& cfg);

inline constexpr Index kKroneckerCap = 4096;

// Dense solve of (I - alpha * A1 (x) A2) vec(X) = (1 - alpha) vec(H), with
// row-major vectorization. Intended as an oracle for small instances.
SolutionX kronecker_direct_solve(const SparseMatrix& a1, const SparseMatrix& a2, const Matrix& h,
                                 double alpha, Index cap = kKroneckerCap);

enum class Calibration { affine, clip };

struct SylvesterPrediction {
  Matrix ratings;
  double scale = 1.0;
  double offset = 0.0;
  bool degenerate = false;
};

// Maps a solution to the rating range. Affine: least-squares fit of
// scale * X + offset on the training entries, then clipping. A constant X on
// the training entries falls back to the training mean.
SylvesterPrediction sylvester_predict(const SolutionX& sol, const Matrix& train_h,
                                      const Matrix& train_mask, double min_rating,
                                      double max_rating, Calibration calibration,
                                      std::ostream* warn = nullptr);

}  // namespace symgnn
