#pragma once

#include <optional>
#include <vector>

#include "dicke/liouvillian.hpp"
#include "dicke/types.hpp"

namespace dicke {

/// Dissipative gaps in N*Gamma/2 units.  delta_1 / delta_2 are the |Re| of the
/// first nonzero eigenvalue with nonzero / zero imaginary part; delta_omega is
/// the smallest nonzero |Im|.  A field is absent when no eigenvalue of that
/// class lies within the retained set (the caller must widen k).
struct GapSummary {
  std::optional<double> delta_1;
  std::optional<double> delta_2;
  std::optional<double> delta_omega;
  double im_zero_tolerance = 1e-7;
};

enum class SpectrumMethod { dense, shift_invert };

/// Eigenvalues in N*Gamma/2 units, sorted by ascending |Re|, ties by ascending
/// Im.  The first entry is the steady-state eigenvalue 0 (to tolerance).
struct SpectrumResult {
  std::vector<Complex> eigenvalues;
  std::string units_tag = "NGamma/2";
  int n_requested = 0;
  SpectrumMethod method = SpectrumMethod::dense;
  GapSummary gaps;
  // Right eigenvectors (columns, vectorized density matrices), kept only when
  // requested in SpectralConfig.
  std::optional<Matrix> eigenvectors;
};

struct SpectralConfig {
  int dense_cap = 4096;          // max D for the dense path
  double residual_tol = 1e-8;    // ||L v - lambda v|| / ||v|| in N*Gamma/2 units
  double im_zero_tolerance = 1e-7;
  int max_krylov = 600;          // Arnoldi subspace hard cap
  bool keep_eigenvectors = false;
  double steady_residual_tol = 1e-9;  // ||L vec(rho)||_inf <= tol * ||L||_inf
  bool check_uniqueness = true;       // probe for degenerate steady states
  double max_probe_frequency = 512.0;  // gap_spectrum frequency-search ceiling
};

SpectrumResult full_spectrum(const Superoperator& L, const SpectralConfig& cfg = {});

/// k eigenvalues nearest `shift` (N*Gamma/2 units) by shift-inverted Arnoldi
/// iteration.  Complex conjugate partners of oscillatory eigenvalues are
/// completed into the returned set even when the shift is one-sided.
SpectrumResult low_lying_spectrum(const Superoperator& L, int k, Complex shift = {0, 0},
                                  const SpectralConfig& cfg = {});

/// Gap-oriented spectrum: combines a shift at zero (steady state + real
/// relaxation ladder) with shifts along the imaginary axis that capture the
/// oscillatory families near q * delta_omega, q = 1..n_harmonics.  The
/// bandwidth is discovered automatically by probing.
SpectrumResult gap_spectrum(const Superoperator& L, int k_per_shift = 8,
                            int n_harmonics = 2, const SpectralConfig& cfg = {});

DensityMatrix steady_state(const Superoperator& L, const SpectralConfig& cfg = {});

GapSummary classify_gaps(const SpectrumResult& spectrum, double im_zero_tolerance = 1e-7);

}  // namespace dicke
