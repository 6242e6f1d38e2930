#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <stdexcept>
#include <string>

namespace symgnn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Index = Eigen::Index;

// Error hierarchy. Everything thrown by the library derives from Error so the
// CLI can report and exit cleanly.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ValidationError : Error {
  using Error::Error;
};
struct ParameterError : Error {
  using Error::Error;
};
struct ParseError : Error {
  using Error::Error;
};
struct IntegrityError : Error {
  using Error::Error;
};
struct ShapeError : Error {
  using Error::Error;
};
struct ConfigError : Error {
  using Error::Error;
};

inline std::string shape_str(Index rows, Index cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

template <typename M>
std::string shape_str(const M& m) {
  return shape_str(m.rows(), m.cols());
}

}  // namespace symgnn
