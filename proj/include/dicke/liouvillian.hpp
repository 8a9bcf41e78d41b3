#pragma once

#include "dicke/spin_algebra.hpp"
#include "dicke/types.hpp"

namespace dicke {

/// Physical parameters of one simulation instance: N driven two-level atoms
/// collectively coupled to a broadband squeezed vacuum with photon number
/// n_bar and two-photon correlation amplitude m = m_abs * exp(i phi).
struct ModelParams {
  int n_atoms = 1;
  double rabi = 0.0;               // |Omega|
  double drive_phase = M_PI / 2.;  // psi
  double gamma = 1.0;              // single-atom decay rate Gamma
  double n_bar = 0.0;
  double m_abs = 0.0;
  double squeeze_phase = 0.0;      // phi

  // Collective energy unit N*Gamma/2; all reported spectra are in these units.
  double collective_unit() const { return 0.5 * n_atoms * gamma; }
  // Scaled drive strength 2|Omega| / (N Gamma); the critical point sits at 1.
  double drive_ratio() const { return rabi / collective_unit(); }

  // Parameters in reduced units: N*Gamma/2 = 1 (gamma = 2/N), |Omega| = ratio,
  // with perfect squeezing |m| = sqrt(n_bar (n_bar + 1)).
  static ModelParams from_drive_ratio(int n_atoms, double drive_ratio, double n_bar = 0.0,
                                      double drive_phase = M_PI / 2., double squeeze_phase = 0.0);

  ModelParams with_perfect_squeezing() const;

  // Throws on invariant violations (|m|^2 <= n_bar(n_bar+1), rates >= 0, N >= 1).
  void validate() const;
};

/// Vectorized Liouvillian, column-stacking convention vec(AXB) = (B^T (x) A) vec(X).
struct Superoperator {
  int atom_dim = 0;   // d = N+1
  int dim = 0;        // D = d^2
  double energy_unit = 1.0;  // N*Gamma/2 in the entries' absolute units
  SparseMatrix entries;
};

Superoperator build_liouvillian(const ModelParams& params, int atom_cap = kDefaultAtomCap);

/// Matrix-free evaluator of the master-equation right-hand side.  Every
/// collective operator is a single band in the Dicke basis, so one
/// application runs a fused O(d^2) stencil with no temporaries.
class MasterEquation {
 public:
  explicit MasterEquation(const ModelParams& params, int atom_cap = kDefaultAtomCap);

  // drho/dt for a (not necessarily valid) d x d matrix rho.
  Matrix apply(const Matrix& rho) const;
  void apply_into(const Matrix& rho, Matrix& drho) const;

  const ModelParams& params() const { return params_; }
  int dim() const { return dim_; }

 private:
  ModelParams params_;
  int dim_ = 0;
  RealVector ladder_;  // ladder_[k] = <m_k+1|S+|m_k>, the only matrix elements
  Complex drive_amp_;  // |Omega| e^{i psi}
  Complex coeff_down_, coeff_up_, coeff_pp_, coeff_mm_;
};

/// One-shot convenience wrapper around MasterEquation.
Matrix apply_rhs(const ModelParams& params, const DensityMatrix& rho);

}  // namespace dicke
