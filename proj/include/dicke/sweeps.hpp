#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dicke/liouvillian.hpp"
#include "dicke/spectral.hpp"
#include "dicke/types.hpp"

namespace dicke {

enum class SweepAxis { drive, n_bar, size };

struct SweepPlan {
  SweepAxis axis = SweepAxis::drive;
  std::vector<double> points;  // drive ratios, n_bar values, or atom numbers
  // Template for the fixed parameters.  For size sweeps the drive ratio is
  // taken from here and gamma is rescaled as 1/N so N*Gamma/2 stays fixed.
  ModelParams base = ModelParams::from_drive_ratio(10, 1.8);
  bool perfect_squeezing = true;

  bool want_observables = true;
  bool want_variances = true;
  bool want_gaps = false;
  int k = 8;             // eigenvalues per shift when gaps are requested
  int max_k = 32;        // widening cap when a gap class is missing
  int n_harmonics = 2;   // oscillatory families retained per point
  int workers = 1;
  SpectralConfig spectral;
};

struct DiagnosticRecord {
  double point = 0.0;  // the swept parameter value
  ModelParams params;  // full provenance for this row
  std::optional<double> sz_over_n, sx_over_n, sy_over_n;
  std::optional<double> var_x, var_y;
  GapSummary gaps;
  std::vector<Complex> eigenvalues;  // retained low-lying set (N*Gamma/2 units)
  std::string error;                 // nonempty marks a failed point
};

struct SweepTable {
  SweepPlan plan;
  std::vector<DiagnosticRecord> rows;
  std::string started_at, finished_at;  // ISO-8601 UTC
};

SweepTable sweep_drive(const SweepPlan& plan);
SweepTable sweep_squeeze(const SweepPlan& plan);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual_rms = 0.0;       // sqrt(SSR / (n - 2))
  double intercept_stderr = 0.0;   // standard error of the intercept
  double r_squared = 0.0;
};

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

/// One eigenvalue branch continued in N by nearest-neighbor tracking.
struct EigenBranch {
  std::vector<double> n_values;
  std::vector<Complex> lambdas;  // representative with Im >= 0
  bool is_complex = false;       // |Im| above the zero tolerance anywhere
  bool flagged = false;          // tracking ambiguity (two candidates in radius)
  LinearFit re_fit;              // |Re lambda| against 1/N
};

struct SizeScanResult {
  SweepTable table;  // per-N rows: gaps + retained eigenvalues
  std::vector<EigenBranch> branches;
};

/// Low-lying spectra over an N ladder at fixed 2|Omega|/(N Gamma), with
/// per-branch linear fits in 1/N.
SizeScanResult finite_size_scan(const SweepPlan& plan);

}  // namespace dicke
