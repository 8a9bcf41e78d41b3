#pragma once

#include <string>
#include <vector>

#include "dicke/spin_algebra.hpp"
#include "dicke/types.hpp"

namespace dicke {

/// Diagonal of rho in the Dicke basis, m descending from +j to -j.
struct OccupationDistribution {
  std::vector<double> m_values;
  std::vector<double> probabilities;

  double participation_ratio() const;  // 1 / sum p_m^2
};

OccupationDistribution occupation_distribution(const DensityMatrix& rho);

/// State multipoles rho_kq = Tr[rho T_kq^dag] in the orthonormal irreducible
/// tensor basis T_kq, k = 0..2j, q = -k..k.
struct MultipoleTable {
  int two_j = 0;
  std::vector<std::vector<Complex>> coeffs;  // coeffs[k][q + k]

  Complex get(int k, int q) const { return coeffs[k][q + k]; }
  int k_max() const { return two_j; }
};

MultipoleTable multipole_components(const DensityMatrix& rho);

/// Orthonormal irreducible tensor operator T_kq on the spin-j space,
/// Tr[T_kq^dag T_k'q'] = delta delta.  two_j = 2j fixes the dimension.
Matrix tensor_operator(int two_j, int k, int q);

/// Clebsch-Gordan coefficient <j1 m1; j2 m2 | J M> with doubled-integer
/// arguments (two_j1 = 2*j1, ...).  Racah formula, log-factorial accumulation.
double clebsch_gordan(int two_j1, int two_m1, int two_j2, int two_m2, int two_J, int two_M);

/// Spin Wigner quasi-probability on the sphere, normalized to unit integral.
struct WignerMap {
  std::vector<double> theta_grid;  // [0, pi], inclusive
  std::vector<double> phi_grid;    // [0, 2 pi), exclusive
  RealMatrix values;               // n_theta x n_phi
  double max_imag_residue = 0.0;   // |Im W| before truncation, reality check
  std::string warning;             // set when the grid under-resolves k = 2j

  double spherical_integral() const;  // trapezoid in theta, rectangle in phi
};

WignerMap spin_wigner(const DensityMatrix& rho, int n_theta = 181, int n_phi = 360,
                      int workers = 1);

/// (Delta Sx^2, Delta Sy^2) for the given state.
std::pair<double, double> transverse_variances(const DensityMatrix& rho,
                                               const SpinOperators& ops);

}  // namespace dicke
