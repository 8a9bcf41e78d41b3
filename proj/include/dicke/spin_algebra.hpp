#pragma once

#include "dicke/types.hpp"

namespace dicke {

/// Collective spin operators in the symmetric (j = N/2) Dicke basis.
///
/// Basis states |j, m> are ordered by descending m, i.e. index 0 is m = +j
/// and index N is m = -j.  With that ordering S+ lives on the first
/// superdiagonal.  All matrices are dense (d = N+1 stays small); sparsity
/// is exploited only when assembling superoperators.
struct SpinOperators {
  int n_atoms = 0;
  int dim = 0;  // N + 1
  Matrix s_plus, s_minus, s_x, s_y, s_z;

  double j() const { return 0.5 * n_atoms; }
  // m quantum number of basis index i (m descending).
  double m_of_index(int i) const { return j() - i; }
};

/// Density matrix in the same Dicke basis.  Invariants (hermiticity, unit
/// trace, positivity up to numerical noise) are checked by is_valid_density.
struct DensityMatrix {
  int dim = 0;
  Matrix data;
};

SpinOperators build_spin_operators(int n_atoms, int atom_cap = kDefaultAtomCap);

// |m = -j><m = -j| (all spins down) and the maximally mixed state.
DensityMatrix all_down_state(int n_atoms);
DensityMatrix maximally_mixed_state(int n_atoms);
DensityMatrix density_from_matrix(const Matrix& rho);

// Invariant checks (hermiticity / trace to 1e-10, min eigenvalue >= -1e-8 by
// default).  Returns a diagnostic string, empty when the state is valid.
std::string density_violation(const DensityMatrix& rho, double herm_tol = 1e-10,
                              double trace_tol = 1e-10, double positivity_tol = 1e-8);
bool is_valid_density(const DensityMatrix& rho, double herm_tol = 1e-10,
                      double trace_tol = 1e-10, double positivity_tol = 1e-8);

// Tr[op rho]
Complex expectation(const Matrix& op, const DensityMatrix& rho);

// Tr[op^2 rho] - Tr[op rho]^2 for Hermitian op.
double variance(const Matrix& op, const DensityMatrix& rho, double herm_tol = 1e-10);

}  // namespace dicke
