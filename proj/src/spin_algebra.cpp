#include "dicke/spin_algebra.hpp"

#include <cmath>

namespace dicke {

SpinOperators build_spin_operators(int n_atoms, int atom_cap) {
  if (n_atoms < 1)
    throw SizeError("build_spin_operators: n_atoms must be >= 1, got " +
                    std::to_string(n_atoms));
  if (n_atoms > atom_cap)
    throw SizeError("build_spin_operators: n_atoms = " + std::to_string(n_atoms) +
                    " exceeds cap " + std::to_string(atom_cap));

  const int d = n_atoms + 1;
  const double j = 0.5 * n_atoms;

  SpinOperators ops;
  ops.n_atoms = n_atoms;
  ops.dim = d;
  ops.s_plus = Matrix::Zero(d, d);
  ops.s_z = Matrix::Zero(d, d);

  // Index i holds m = j - i, so S+ |j,m> = sqrt(j(j+1) - m(m+1)) |j,m+1>
  // lands one row above.
  for (int i = 0; i < d; ++i) {
    const double m = j - i;
    ops.s_z(i, i) = m;
    if (i > 0) ops.s_plus(i - 1, i) = std::sqrt(j * (j + 1) - m * (m + 1));
  }
  ops.s_minus = ops.s_plus.adjoint();
  ops.s_x = 0.5 * (ops.s_plus + ops.s_minus);
  ops.s_y = Complex(0, -0.5) * (ops.s_plus - ops.s_minus);
  return ops;
}

DensityMatrix all_down_state(int n_atoms) {
  const int d = n_atoms + 1;
  DensityMatrix rho{d, Matrix::Zero(d, d)};
  rho.data(d - 1, d - 1) = 1.0;  // m = -j is the last basis index
  return rho;
}

DensityMatrix maximally_mixed_state(int n_atoms) {
  const int d = n_atoms + 1;
  return {d, Matrix::Identity(d, d) / static_cast<double>(d)};
}

DensityMatrix density_from_matrix(const Matrix& rho) {
  require_square(rho, "density_from_matrix");
  return {static_cast<int>(rho.rows()), rho};
}

std::string density_violation(const DensityMatrix& rho, double herm_tol,
                              double trace_tol, double positivity_tol) {
  if (rho.data.rows() != rho.dim || rho.data.cols() != rho.dim)
    return "shape does not match dim";
  const double herm = (rho.data - rho.data.adjoint()).cwiseAbs().maxCoeff();
  if (herm > herm_tol) return "hermiticity deviation " + std::to_string(herm);
  const double tracedev = std::abs(rho.data.trace() - Complex(1, 0));
  if (tracedev > trace_tol) return "trace deviation " + std::to_string(tracedev);
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (rho.data + rho.data.adjoint()),
                                           Eigen::EigenvaluesOnly);
  const double min_eig = es.eigenvalues().minCoeff();
  if (min_eig < -positivity_tol) return "min eigenvalue " + std::to_string(min_eig);
  return {};
}

bool is_valid_density(const DensityMatrix& rho, double herm_tol, double trace_tol,
                      double positivity_tol) {
  return density_violation(rho, herm_tol, trace_tol, positivity_tol).empty();
}

Complex expectation(const Matrix& op, const DensityMatrix& rho) {
  require_square(op, "expectation");
  require_same_dim(op.rows(), rho.data.rows(), "expectation");
  return (op * rho.data).trace();
}

double variance(const Matrix& op, const DensityMatrix& rho, double herm_tol) {
  require_square(op, "variance");
  require_same_dim(op.rows(), rho.data.rows(), "variance");
  const double herm = (op - op.adjoint()).cwiseAbs().maxCoeff();
  if (herm > herm_tol)
    throw std::invalid_argument("variance: operator is not Hermitian (deviation " +
                                std::to_string(herm) + ")");
  const Complex mean = (op * rho.data).trace();
  const Complex second = (op * (op * rho.data)).trace();
  return second.real() - mean.real() * mean.real() + mean.imag() * mean.imag();
}

}  // namespace dicke
