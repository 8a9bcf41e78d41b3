#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace dicke {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<Complex>;
using Triplet = Eigen::Triplet<Complex>;

// Largest supported atom number; d = N+1 and the superoperator is (N+1)^2.
inline constexpr int kDefaultAtomCap = 512;

// Thrown when a requested size exceeds a configured cap.
class SizeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Thrown on shape mismatches between operators and states.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Thrown when an iterative solver fails to reach its tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Thrown when the steady state is not unique.
class MultiplicityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require_square(const Matrix& m, const std::string& who) {
  if (m.rows() != m.cols())
    throw DimensionError(who + ": matrix must be square, got " +
                         std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
}

inline void require_same_dim(Eigen::Index a, Eigen::Index b, const std::string& who) {
  if (a != b)
    throw DimensionError(who + ": dimension mismatch (" + std::to_string(a) +
                         " vs " + std::to_string(b) + ")");
}

}  // namespace dicke
