#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "dicke/liouvillian.hpp"
#include "dicke/types.hpp"

namespace dicke {

/// Observable traces on a uniform grid of scaled time tau = (N Gamma / 2) t.
struct TimeTrace {
  std::vector<double> times;  // scaled units, strictly increasing
  std::vector<double> sz_over_n, sx_over_n, sy_over_n;
  std::vector<double> var_x, var_y;  // filled only when requested
  std::vector<std::pair<double, DensityMatrix>> checkpoints;
  double sample_dt = 0.0;
  double max_trace_drift = 0.0;  // |Tr rho - 1| over the run
  double max_herm_drift = 0.0;   // max |rho - rho^dag| element before projection
};

struct EvolveOptions {
  double t_final = 150.0;    // scaled units
  double sample_dt = 0.01;   // scaled units
  double rtol = 1e-8;
  double atol = 1e-10;
  bool record_variances = false;
  std::vector<double> checkpoint_times;  // scaled; nearest sample is stored
  int herm_project_interval = 100;       // accepted steps between (rho+rho^dag)/2
};

TimeTrace evolve(const ModelParams& params, const DensityMatrix& rho0,
                 const EvolveOptions& opts = {});

/// Same integrator with a caller-supplied right-hand side; used to cross-check
/// the matrix-free path against the assembled superoperator.
using RhsFn = std::function<void(const Matrix& rho, Matrix& drho)>;
TimeTrace evolve_with_rhs(const ModelParams& params, const DensityMatrix& rho0,
                          const RhsFn& rhs, const EvolveOptions& opts = {});

enum class Window { rectangular, hann };

/// One-sided amplitude spectrum of (sz_over_n - mean) with peaks refined by
/// quadratic interpolation; frequencies are angular, in N*Gamma/2 units.
struct FourierPeaks {
  std::vector<double> frequencies;
  std::vector<double> amplitudes;
  std::vector<std::pair<double, double>> peak_list;  // (freq, amp), amp descending
  double bin_width = 0.0;  // angular frequency spacing of the padded grid
};

FourierPeaks fourier_spectrum(const TimeTrace& trace, double transient_cut = 30.0,
                              Window window = Window::hann);

/// Exponential decay rate of the oscillation envelope of sz_over_n, extracted
/// from log-linear regression of local extrema after detrending.  Returns the
/// rate in N*Gamma/2 units.
double envelope_decay_rate(const TimeTrace& trace, double oscillation_freq,
                           double fit_start, double fit_end,
                           double amplitude_floor = 1e-6);

}  // namespace dicke
