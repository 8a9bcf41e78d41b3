#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "dicke/dynamics.hpp"
#include "dicke/spectral.hpp"
#include "oracles.hpp"

using namespace dicke;

namespace {

double trace_distance(const Matrix& a, const Matrix& b) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a - b, Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

}  // namespace

TEST_CASE("dark state stays put") {
  ModelParams p;
  p.n_atoms = 6;
  p.rabi = 0.0;
  p.gamma = 1.0;
  EvolveOptions opts;
  opts.t_final = 10.0;
  opts.sample_dt = 0.1;
  const auto trace = evolve(p, all_down_state(6), opts);
  REQUIRE(trace.times.size() == 101);
  for (double sz : trace.sz_over_n) CHECK(sz == doctest::Approx(-0.5).epsilon(1e-10));
  CHECK(trace.max_trace_drift < 1e-10);
}

TEST_CASE("sampling grid is uniform and complete") {
  ModelParams p = ModelParams::from_drive_ratio(4, 1.2);
  EvolveOptions opts;
  opts.t_final = 3.0;
  opts.sample_dt = 0.05;
  opts.record_variances = true;
  opts.checkpoint_times = {1.0, 2.5};
  const auto trace = evolve(p, all_down_state(4), opts);
  REQUIRE(trace.times.size() == 61);
  for (size_t i = 1; i < trace.times.size(); ++i)
    CHECK(trace.times[i] - trace.times[i - 1] == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(trace.var_x.size() == trace.times.size());
  REQUIRE(trace.checkpoints.size() == 2);
  CHECK(trace.checkpoints[0].first == doctest::Approx(1.0));
  CHECK(is_valid_density(trace.checkpoints[1].second, 1e-8, 1e-7, 1e-6));
}

TEST_CASE("tolerance halving changes the endpoint within the error budget") {
  ModelParams p = ModelParams::from_drive_ratio(10, 1.8, 0.1);
  EvolveOptions coarse;
  coarse.t_final = 20.0;
  coarse.sample_dt = 0.1;
  coarse.rtol = 1e-8;
  coarse.atol = 1e-10;
  EvolveOptions fine = coarse;
  fine.rtol = 5e-9;
  fine.atol = 5e-11;
  const auto a = evolve(p, all_down_state(10), coarse);
  const auto b = evolve(p, all_down_state(10), fine);
  CHECK(std::abs(a.sz_over_n.back() - b.sz_over_n.back()) < 10 * 1e-8);
}

TEST_CASE("matrix-free and assembled-superoperator trajectories agree") {
  ModelParams p = ModelParams::from_drive_ratio(8, 1.8, 0.4);
  const auto sop = build_liouvillian(p);
  EvolveOptions opts;
  opts.t_final = 10.0;
  opts.sample_dt = 0.1;

  const auto direct = evolve(p, all_down_state(8), opts);
  const auto assembled = evolve_with_rhs(
      p, all_down_state(8),
      [&sop](const Matrix& rho, Matrix& drho) {
        const Vector v = Eigen::Map<const Vector>(rho.data(), rho.size());
        const Vector lv = sop.entries * v;
        drho = Eigen::Map<const Matrix>(lv.data(), rho.rows(), rho.cols());
      },
      opts);
  REQUIRE(direct.times.size() == assembled.times.size());
  for (size_t i = 0; i < direct.times.size(); ++i)
    CHECK(std::abs(direct.sz_over_n[i] - assembled.sz_over_n[i]) < 1e-7);
}

TEST_CASE("long-time evolution reaches the steady state in the stationary phase") {
  ModelParams p = ModelParams::from_drive_ratio(10, 0.75, 0.3);
  const auto sop = build_liouvillian(p);
  const auto target = steady_state(sop);
  EvolveOptions opts;
  opts.t_final = 60.0;
  opts.sample_dt = 0.5;
  opts.checkpoint_times = {60.0};
  const auto trace = evolve(p, all_down_state(10), opts);
  REQUIRE(!trace.checkpoints.empty());
  CHECK(trace_distance(trace.checkpoints.back().second.data, target.data) < 1e-6);
}

TEST_CASE("stationary phase relaxes monotonically after the initial transient") {
  ModelParams p = ModelParams::from_drive_ratio(12, 0.75);
  EvolveOptions opts;
  opts.t_final = 40.0;
  opts.sample_dt = 0.05;
  const auto trace = evolve(p, all_down_state(12), opts);
  // after the transient the polarization creeps up without oscillating
  size_t start = 200;  // t = 10
  int sign_changes = 0;
  for (size_t i = start + 1; i < trace.times.size(); ++i) {
    const double d = trace.sz_over_n[i] - trace.sz_over_n[i - 1];
    if (d < -1e-10) ++sign_changes;
  }
  CHECK(sign_changes == 0);
}

TEST_CASE("fourier: synthetic cosine lands on its frequency") {
  TimeTrace trace;
  trace.sample_dt = 0.05;
  const int n = 2048;
  for (int i = 0; i < n; ++i) {
    const double t = i * 0.05;
    trace.times.push_back(t);
    trace.sz_over_n.push_back(0.3 * std::cos(3.0 * t) + 0.1);
    trace.sx_over_n.push_back(0.0);
    trace.sy_over_n.push_back(0.0);
  }
  for (auto window : {Window::hann, Window::rectangular}) {
    const auto peaks = fourier_spectrum(trace, 0.0, window);
    REQUIRE(!peaks.peak_list.empty());
    CHECK(std::abs(peaks.peak_list[0].first - 3.0) < peaks.bin_width);
    if (window == Window::hann)
      CHECK(peaks.peak_list[0].second == doctest::Approx(0.3).epsilon(0.05));
  }
}

TEST_CASE("fourier input validation") {
  TimeTrace trace;
  trace.times = {0.0, 0.1, 0.3};  // non-uniform
  trace.sz_over_n = {0.0, 0.1, 0.2};
  CHECK_THROWS_AS(fourier_spectrum(trace, 0.0, Window::hann), std::invalid_argument);

  TimeTrace short_trace;
  for (int i = 0; i < 100; ++i) {
    short_trace.times.push_back(0.1 * i);
    short_trace.sz_over_n.push_back(0.0);
  }
  CHECK_THROWS_AS(fourier_spectrum(short_trace, 0.0, Window::hann),
                  std::invalid_argument);
}

TEST_CASE("oscillation frequency matches the Liouvillian imaginary part at N=30") {
  ModelParams p = ModelParams::from_drive_ratio(30, 1.8);
  const auto gaps = gap_spectrum(build_liouvillian(p), 8, 3).gaps;
  REQUIRE(gaps.delta_omega.has_value());

  EvolveOptions opts;
  opts.t_final = 150.0;
  opts.sample_dt = 0.01;
  const auto trace = evolve(p, all_down_state(30), opts);
  // early cut: at this modest N the harmonics are above noise only while the
  // oscillation amplitude is still appreciable
  const auto peaks = fourier_spectrum(trace, 5.0, Window::hann);
  REQUIRE(!peaks.peak_list.empty());
  const double peak = peaks.peak_list[0].first;
  CHECK(std::abs(peak - gaps.delta_omega.value()) < peaks.bin_width);

  // harmonic comb: further prominent peaks sit near integer multiples
  int harmonics_found = 0;
  for (size_t i = 0; i < std::min<size_t>(6, peaks.peak_list.size()); ++i) {
    const double f = peaks.peak_list[i].first;
    const double q = f / gaps.delta_omega.value();
    if (std::abs(q - std::lround(q)) < 0.1 && std::lround(q) >= 2) ++harmonics_found;
  }
  CHECK(harmonics_found >= 1);
}

TEST_CASE("envelope decay rate on a synthetic damped oscillation") {
  TimeTrace trace;
  trace.sample_dt = 0.01;
  for (int i = 0; i <= 12000; ++i) {
    const double t = 0.01 * i;
    trace.times.push_back(t);
    trace.sz_over_n.push_back(0.4 * std::exp(-0.05 * t) * std::cos(3.0 * t) - 0.001);
    trace.sx_over_n.push_back(0.0);
    trace.sy_over_n.push_back(0.0);
  }
  const double rate = envelope_decay_rate(trace, 3.0, 5.0, 110.0);
  CHECK(rate == doctest::Approx(0.05).epsilon(0.03));
}

TEST_CASE("invalid inputs are rejected") {
  ModelParams p = ModelParams::from_drive_ratio(4, 1.0);
  DensityMatrix bad{5, 0.5 * Matrix::Identity(5, 5)};
  CHECK_THROWS_AS(evolve(p, bad, {}), std::invalid_argument);

  EvolveOptions opts;
  opts.t_final = -1;
  CHECK_THROWS_AS(evolve(p, all_down_state(4), opts), std::invalid_argument);
}
