#include "symgnn/sylvester.hpp"

#include <Eigen/LU>

#include <cmath>
#include <ostream>

namespace symgnn {

void SolverConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("alpha must lie in (0, 1)");
  if (!(tol > 0.0)) throw ParameterError("tol must be positive");
  if (max_iter < 1) throw ParameterError("max_iter must be positive");
}

namespace {

void check_shapes(const SparseMatrix& a1, const SparseMatrix& a2, const Matrix& h) {
  if (a1.rows() != a1.cols() || a2.rows() != a2.cols()) {
    throw ShapeError("adjacency matrices must be square: " + shape_str(a1) + ", " + shape_str(a2));
  }
  if (h.rows() != a1.rows() || h.cols() != a2.rows()) {
    throw ShapeError("H has shape " + shape_str(h) + ", expected " + shape_str(a1.rows(), a2.rows()));
  }
}

}  // namespace

SolutionX fixed_point_solve(const SparseMatrix& a1, const SparseMatrix& a2, const Matrix& h,
                            const SolverConfig& cfg) {
  cfg.validate();
  check_shapes(a1, a2, h);
  // A1 X A2^T evaluated as (A2 (A1 X)^T)^T to keep both products sparse-dense.
  const auto sandwich = [&](const Matrix& m) -> Matrix {
    const Matrix left = a1 * m;
    return (a2 * left.transpose()).transpose();
  };
  SolutionX sol;
  sol.x = h;
  // X^{t+1} - X^t = alpha A1 (X^t - X^{t-1}) A2^T, so the increment is carried
  // forward instead of being recovered by subtracting nearly equal iterates.
  Matrix step = cfg.alpha * (sandwich(h) - h);
  for (int it = 1; it <= cfg.max_iter; ++it) {
    if (it > 1) step = cfg.alpha * sandwich(step);
    sol.x += step;
    const double r = step.norm();
    sol.residuals.push_back(r);
    sol.iterations = it;
    sol.final_residual = r;
    if (r <= cfg.tol) {
      sol.converged = true;
      break;
    }
  }
  return sol;
}

SolutionX kronecker_direct_solve(const SparseMatrix& a1, const SparseMatrix& a2, const Matrix& h,
                                 double alpha, Index cap) {
  check_shapes(a1, a2, h);
  const Index n1 = h.rows(), n2 = h.cols(), n = n1 * n2;
  if (n > cap) {
    throw ParameterError("Kronecker system has " + std::to_string(n) + " unknowns, cap is " +
                         std::to_string(cap));
  }
  const Matrix d1 = Matrix(a1);
  const Matrix d2 = Matrix(a2);
  Matrix system = Matrix::Identity(n, n);
  for (Index i = 0; i < n1; ++i) {
    for (Index k = 0; k < n1; ++k) {
      if (d1(i, k) == 0.0) continue;
      system.block(i * n2, k * n2, n2, n2) -= alpha * d1(i, k) * d2;
    }
  }
  Vector rhs(n);
  for (Index i = 0; i < n1; ++i) rhs.segment(i * n2, n2) = (1.0 - alpha) * h.row(i).transpose();

  Eigen::FullPivLU<Matrix> lu(system);
  if (!lu.isInvertible()) throw Error("Kronecker system is singular");
  const Vector v = lu.solve(rhs);
  SolutionX sol;
  sol.x.resize(n1, n2);
  for (Index i = 0; i < n1; ++i) sol.x.row(i) = v.segment(i * n2, n2).transpose();
  sol.iterations = 1;
  sol.final_residual = (system * v - rhs).norm();
  sol.converged = true;
  return sol;
}

SylvesterPrediction sylvester_predict(const SolutionX& sol, const Matrix& train_h,
                                      const Matrix& train_mask, double min_rating,
                                      double max_rating, Calibration calibration,
                                      std::ostream* warn) {
  if (sol.x.rows() != train_h.rows() || sol.x.cols() != train_h.cols() ||
      train_mask.rows() != train_h.rows() || train_mask.cols() != train_h.cols()) {
    throw ShapeError("sylvester_predict: shapes " + shape_str(sol.x) + ", " + shape_str(train_h) +
                     ", " + shape_str(train_mask));
  }
  SylvesterPrediction out;
  if (calibration == Calibration::affine) {
    const double count = train_mask.sum();
    if (count <= 0.0) throw ParameterError("sylvester_predict: empty training mask");
    const double mx = sol.x.cwiseProduct(train_mask).sum() / count;
    const double my = train_h.cwiseProduct(train_mask).sum() / count;
    const Matrix dx = ((sol.x.array() - mx) * train_mask.array()).matrix();
    const Matrix dy = ((train_h.array() - my) * train_mask.array()).matrix();
    const double sxx = dx.squaredNorm();
    if (sxx <= 1e-12 * std::max(1.0, mx * mx) * count) {
      out.degenerate = true;
      out.scale = 0.0;
      out.offset = my;
      if (warn != nullptr) *warn << "warning: solution is constant on training entries; predicting the mean\n";
    } else {
      out.scale = dx.cwiseProduct(dy).sum() / sxx;
      out.offset = my - out.scale * mx;
    }
  }
  out.ratings = ((sol.x.array() * out.scale + out.offset).cwiseMax(min_rating).cwiseMin(max_rating)).matrix();
  return out;
}

}  // namespace symgnn
