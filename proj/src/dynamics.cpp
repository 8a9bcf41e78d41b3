#include "dicke/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dicke {

namespace {

// Tr[A B] without forming the product.
Complex trace_of_product(const Matrix& a, const Matrix& b) {
  return a.transpose().cwiseProduct(b).sum();
}

// Dormand-Prince 5(4) tableau with the standard quartic dense-output weights.
struct Dopri5 {
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                          a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  // b - b_hat, for the embedded 4th-order error estimate
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double d1 = -12715105075.0 / 11282082432.0,
                          d3 = 87487479700.0 / 32700410799.0,
                          d4 = -10690763975.0 / 1880347072.0,
                          d5 = 701980252875.0 / 199316789632.0,
                          d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;
};

struct DenseInterpolant {
  double t0 = 0, h = 0;
  Matrix c1, c2, c3, c4, c5;

  Matrix eval(double t) const {
    const double theta = (t - t0) / h;
    const double theta1 = 1.0 - theta;
    return c1 + theta * (c2 + theta1 * (c3 + theta * (c4 + theta1 * c5)));
  }
};

double error_norm(const Matrix& err, const Matrix& y0, const Matrix& y1, double atol,
                  double rtol) {
  double acc = 0.0;
  const auto* e = err.data();
  const auto* a = y0.data();
  const auto* b = y1.data();
  const Eigen::Index n = err.size();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double sc = atol + rtol * std::max(std::abs(a[i]), std::abs(b[i]));
    const double q = std::abs(e[i]) / sc;
    acc += q * q;
  }
  return std::sqrt(acc / static_cast<double>(n));
}

}  // namespace

TimeTrace evolve_with_rhs(const ModelParams& params, const DensityMatrix& rho0,
                          const RhsFn& rhs, const EvolveOptions& opts) {
  params.validate();
  if (opts.t_final <= 0) throw std::invalid_argument("evolve: t_final must be > 0");
  if (opts.sample_dt <= 0) throw std::invalid_argument("evolve: sample_dt must be > 0");
  if (opts.rtol <= 0 || opts.atol <= 0)
    throw std::invalid_argument("evolve: tolerances must be positive");
  {
    const std::string why = density_violation(rho0);
    if (!why.empty()) throw std::invalid_argument("evolve: invalid initial state: " + why);
  }
  const SpinOperators ops = build_spin_operators(params.n_atoms);
  require_same_dim(rho0.dim, ops.dim, "evolve");

  const double unit = params.collective_unit();  // scaled time = unit * t
  const double t_end = opts.t_final / unit;
  const double dt_abs = opts.sample_dt / unit;
  const int n_samples = static_cast<int>(std::floor(opts.t_final / opts.sample_dt + 1e-9)) + 1;

  const double n_inv = 1.0 / params.n_atoms;
  Matrix sx2, sy2;
  if (opts.record_variances) {
    sx2 = ops.s_x * ops.s_x;
    sy2 = ops.s_y * ops.s_y;
  }

  std::vector<int> checkpoint_index;
  for (double tc : opts.checkpoint_times)
    checkpoint_index.push_back(static_cast<int>(std::lround(tc / opts.sample_dt)));

  TimeTrace trace;
  trace.sample_dt = opts.sample_dt;
  trace.times.reserve(static_cast<size_t>(n_samples));

  auto record = [&](int sample, const Matrix& rho) {
    trace.times.push_back(sample * opts.sample_dt);
    trace.sz_over_n.push_back(trace_of_product(ops.s_z, rho).real() * n_inv);
    trace.sx_over_n.push_back(trace_of_product(ops.s_x, rho).real() * n_inv);
    trace.sy_over_n.push_back(trace_of_product(ops.s_y, rho).real() * n_inv);
    if (opts.record_variances) {
      const double mx = trace.sx_over_n.back() * params.n_atoms;
      const double my = trace.sy_over_n.back() * params.n_atoms;
      trace.var_x.push_back(trace_of_product(sx2, rho).real() - mx * mx);
      trace.var_y.push_back(trace_of_product(sy2, rho).real() - my * my);
    }
    trace.max_trace_drift =
        std::max(trace.max_trace_drift, std::abs(rho.trace() - Complex(1, 0)));
    if (std::find(checkpoint_index.begin(), checkpoint_index.end(), sample) !=
        checkpoint_index.end())
      trace.checkpoints.emplace_back(sample * opts.sample_dt,
                                     DensityMatrix{static_cast<int>(rho.rows()), rho});
  };

  Matrix y = rho0.data;
  Matrix k1(y.rows(), y.cols()), k2 = k1, k3 = k1, k4 = k1, k5 = k1, k6 = k1, k7 = k1;
  Matrix ytmp = k1, y1 = k1, yerr = k1;

  rhs(y, k1);
  double t = 0.0;
  // initial step from the scale of the right-hand side
  double h = std::min(dt_abs, 0.01 / std::max(k1.cwiseAbs().maxCoeff(), 1e-12));

  record(0, y);
  int next_sample = 1;
  int accepted = 0;
  const double h_floor = std::max(t_end * 1e-14, 1e-300);

  while (t < t_end && next_sample < n_samples) {
    const double h_ctrl = h;
    h = std::min(h, t_end - t);
    using T = Dopri5;

    ytmp = y + h * T::a21 * k1;
    rhs(ytmp, k2);
    ytmp = y + h * (T::a31 * k1 + T::a32 * k2);
    rhs(ytmp, k3);
    ytmp = y + h * (T::a41 * k1 + T::a42 * k2 + T::a43 * k3);
    rhs(ytmp, k4);
    ytmp = y + h * (T::a51 * k1 + T::a52 * k2 + T::a53 * k3 + T::a54 * k4);
    rhs(ytmp, k5);
    ytmp = y + h * (T::a61 * k1 + T::a62 * k2 + T::a63 * k3 + T::a64 * k4 + T::a65 * k5);
    rhs(ytmp, k6);
    y1 = y + h * (T::b1 * k1 + T::b3 * k3 + T::b4 * k4 + T::b5 * k5 + T::b6 * k6);
    rhs(y1, k7);  // FSAL
    yerr = h * (T::e1 * k1 + T::e3 * k3 + T::e4 * k4 + T::e5 * k5 + T::e6 * k6 + T::e7 * k7);

    const double err = error_norm(yerr, y, y1, opts.atol, opts.rtol);
    if (err <= 1.0) {
      // dense output over [t, t+h] for every sample point inside
      if (next_sample < n_samples && next_sample * dt_abs <= t + h + 1e-300) {
        DenseInterpolant interp;
        interp.t0 = t;
        interp.h = h;
        interp.c1 = y;
        interp.c2 = y1 - y;
        interp.c3 = h * k1 - interp.c2;
        interp.c4 = interp.c2 - h * k7 - interp.c3;
        interp.c5 = h * (T::d1 * k1 + T::d3 * k3 + T::d4 * k4 + T::d5 * k5 + T::d6 * k6 +
                         T::d7 * k7);
        while (next_sample < n_samples && next_sample * dt_abs <= t + h * (1 + 1e-12)) {
          const double ts = next_sample * dt_abs;
          Matrix sample = (std::abs(ts - (t + h)) < 1e-12 * h) ? y1 : interp.eval(ts);
          record(next_sample, sample);
          ++next_sample;
        }
      }
      t += h;
      y.swap(y1);
      k1.swap(k7);
      ++accepted;
      if (accepted % opts.herm_project_interval == 0) {
        const double drift = (y - y.adjoint()).cwiseAbs().maxCoeff();
        trace.max_herm_drift = std::max(trace.max_herm_drift, drift);
        y = 0.5 * (y + y.adjoint()).eval();
        rhs(y, k1);  // keep the FSAL stage consistent with the projected state
      }
      const double factor =
          std::clamp(0.9 * std::pow(std::max(err, 1e-10), -0.2), 0.2, 5.0);
      h = h_ctrl * factor;
    } else {
      const double factor = std::max(0.2, 0.9 * std::pow(err, -0.2));
      h = std::min(h, h_ctrl) * std::min(factor, 1.0);
      if (h < h_floor)
        throw ConvergenceError("evolve: step size underflow at scaled time " +
                               std::to_string(t * unit) + " (stiffness?)");
    }
  }

  // mop up samples that land exactly on t_end
  while (next_sample < n_samples && next_sample * dt_abs <= t + 1e-9 * dt_abs) {
    record(next_sample, y);
    ++next_sample;
  }

  const double final_herm = (y - y.adjoint()).cwiseAbs().maxCoeff();
  trace.max_herm_drift = std::max(trace.max_herm_drift, final_herm);
  if (trace.max_trace_drift > 1e-7)
    throw ConvergenceError("evolve: trace drifted by " + std::to_string(trace.max_trace_drift));
  if (trace.max_herm_drift > 1e-8)
    throw ConvergenceError("evolve: hermiticity drifted by " +
                           std::to_string(trace.max_herm_drift));
  return trace;
}

TimeTrace evolve(const ModelParams& params, const DensityMatrix& rho0,
                 const EvolveOptions& opts) {
  MasterEquation eq(params);
  return evolve_with_rhs(
      params, rho0, [&eq](const Matrix& rho, Matrix& drho) { eq.apply_into(rho, drho); },
      opts);
}

namespace {

void fft_radix2(std::vector<Complex>& a) {
  const size_t n = a.size();
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * M_PI / static_cast<double>(len);
    const Complex wl(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      Complex w(1, 0);
      for (size_t k = 0; k < len / 2; ++k) {
        const Complex u = a[i + k];
        const Complex v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

}  // namespace

FourierPeaks fourier_spectrum(const TimeTrace& trace, double transient_cut, Window window) {
  const size_t n_total = trace.times.size();
  if (n_total < 2) throw std::invalid_argument("fourier_spectrum: trace too short");
  const double dt = trace.times[1] - trace.times[0];
  for (size_t i = 1; i < n_total; ++i)
    if (std::abs(trace.times[i] - trace.times[i - 1] - dt) > 1e-9 * dt)
      throw std::invalid_argument("fourier_spectrum: non-uniform sampling");

  size_t start = 0;
  while (start < n_total && trace.times[start] < transient_cut - 1e-12) ++start;
  const size_t n = n_total - start;
  if (n < 256)
    throw std::invalid_argument("fourier_spectrum: only " + std::to_string(n) +
                                " samples after the transient cut (need >= 256)");

  const double mean =
      std::accumulate(trace.sz_over_n.begin() + static_cast<long>(start),
                      trace.sz_over_n.end(), 0.0) /
      static_cast<double>(n);

  size_t n_pad = 1;
  while (n_pad < n) n_pad <<= 1;
  std::vector<Complex> buf(n_pad, Complex(0, 0));
  double window_sum = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double w = 1.0;
    if (window == Window::hann)
      w = 0.5 * (1.0 - std::cos(2.0 * M_PI * static_cast<double>(i) /
                                static_cast<double>(n - 1)));
    window_sum += w;
    buf[i] = w * (trace.sz_over_n[start + i] - mean);
  }
  fft_radix2(buf);

  FourierPeaks out;
  out.bin_width = 2.0 * M_PI / (static_cast<double>(n_pad) * dt);
  const size_t n_bins = n_pad / 2 + 1;
  out.frequencies.resize(n_bins);
  out.amplitudes.resize(n_bins);
  const double norm = 2.0 / window_sum;
  for (size_t k = 0; k < n_bins; ++k) {
    out.frequencies[k] = out.bin_width * static_cast<double>(k);
    out.amplitudes[k] = norm * std::abs(buf[k]);
  }

  // local maxima, refined by parabolic interpolation on log amplitude
  for (size_t k = 2; k + 1 < n_bins; ++k) {
    const double am = out.amplitudes[k - 1], a0 = out.amplitudes[k], ap = out.amplitudes[k + 1];
    if (a0 > am && a0 >= ap && a0 > 0) {
      const double lm = std::log(std::max(am, 1e-300)), l0 = std::log(a0),
                   lp = std::log(std::max(ap, 1e-300));
      const double denom = lm - 2.0 * l0 + lp;
      double delta = 0.0;
      if (std::abs(denom) > 1e-300) delta = std::clamp(0.5 * (lm - lp) / denom, -0.5, 0.5);
      const double freq = out.bin_width * (static_cast<double>(k) + delta);
      const double amp = std::exp(l0 - 0.25 * (lm - lp) * delta);
      out.peak_list.emplace_back(freq, amp);
    }
  }
  std::sort(out.peak_list.begin(), out.peak_list.end(),
            [](const auto& a, const auto& b) { return a.second > b.second; });
  return out;
}

double envelope_decay_rate(const TimeTrace& trace, double oscillation_freq,
                           double fit_start, double fit_end, double amplitude_floor) {
  if (oscillation_freq <= 0)
    throw std::invalid_argument("envelope_decay_rate: oscillation frequency must be > 0");
  const size_t n = trace.times.size();
  if (n < 16) throw std::invalid_argument("envelope_decay_rate: trace too short");
  const double dt = trace.times[1] - trace.times[0];
  const int half_window =
      std::max(1, static_cast<int>(std::lround(M_PI / oscillation_freq / dt)));

  // remove the slow non-oscillating trend with a one-period moving average
  std::vector<double> osc(n, 0.0);
  for (size_t i = 0; i < n; ++i) {
    const long lo = std::max<long>(0, static_cast<long>(i) - half_window);
    const long hi = std::min<long>(static_cast<long>(n) - 1, static_cast<long>(i) + half_window);
    double mean = 0.0;
    for (long k = lo; k <= hi; ++k) mean += trace.sz_over_n[static_cast<size_t>(k)];
    mean /= static_cast<double>(hi - lo + 1);
    osc[i] = trace.sz_over_n[i] - mean;
  }

  std::vector<double> peak_t, peak_log;
  for (size_t i = 1; i + 1 < n; ++i) {
    if (trace.times[i] < fit_start || trace.times[i] > fit_end) continue;
    const double a = std::abs(osc[i]);
    if (a > std::abs(osc[i - 1]) && a >= std::abs(osc[i + 1]) && a > amplitude_floor) {
      peak_t.push_back(trace.times[i]);
      peak_log.push_back(std::log(a));
    }
  }
  if (peak_t.size() < 4)
    throw ConvergenceError("envelope_decay_rate: only " + std::to_string(peak_t.size()) +
                           " usable envelope peaks in the fit window");

  const double tn = static_cast<double>(peak_t.size());
  const double sx = std::accumulate(peak_t.begin(), peak_t.end(), 0.0);
  const double sy = std::accumulate(peak_log.begin(), peak_log.end(), 0.0);
  double sxx = 0, sxy = 0;
  for (size_t i = 0; i < peak_t.size(); ++i) {
    sxx += peak_t[i] * peak_t[i];
    sxy += peak_t[i] * peak_log[i];
  }
  const double slope = (tn * sxy - sx * sy) / (tn * sxx - sx * sx);
  return -slope;
}

}  // namespace dicke
