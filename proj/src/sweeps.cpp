#include "dicke/sweeps.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "dicke/observables.hpp"
#include "dicke/output.hpp"
#include "dicke/parallel.hpp"

namespace dicke {

namespace {

bool gaps_complete(const GapSummary& g) {
  return g.delta_1.has_value() && g.delta_2.has_value() && g.delta_omega.has_value();
}

void fill_point(DiagnosticRecord& rec, const SweepPlan& plan) {
  try {
    rec.params.validate();
    const Superoperator L = build_liouvillian(rec.params);

    if (plan.want_observables || plan.want_variances) {
      const DensityMatrix rho = steady_state(L, plan.spectral);
      const SpinOperators ops = build_spin_operators(rec.params.n_atoms);
      const double n = rec.params.n_atoms;
      if (plan.want_observables) {
        rec.sz_over_n = expectation(ops.s_z, rho).real() / n;
        rec.sx_over_n = expectation(ops.s_x, rho).real() / n;
        rec.sy_over_n = expectation(ops.s_y, rho).real() / n;
      }
      if (plan.want_variances) {
        const auto [vx, vy] = transverse_variances(rho, ops);
        rec.var_x = vx;
        rec.var_y = vy;
      }
    }

    if (plan.want_gaps) {
      // widen k once if a gap class is missing from the retained set
      int k = std::min(plan.k, L.dim - 2);
      while (true) {
        const SpectrumResult spec = gap_spectrum(L, k, plan.n_harmonics, plan.spectral);
        rec.gaps = spec.gaps;
        rec.eigenvalues = spec.eigenvalues;
        if (gaps_complete(spec.gaps) || k >= plan.max_k || k >= L.dim - 2) break;
        k = std::min({2 * k, plan.max_k, L.dim - 2});
      }
    }
  } catch (const std::exception& e) {
    rec.error = e.what();
  }
}

SweepTable run_sweep(const SweepPlan& plan,
                     const std::function<ModelParams(double)>& params_at) {
  if (plan.points.empty()) throw std::invalid_argument("sweep: no points");
  if (!std::is_sorted(plan.points.begin(), plan.points.end()))
    throw std::invalid_argument("sweep: points must be sorted ascending");

  SweepTable table;
  table.plan = plan;
  table.started_at = iso8601_utc_now();
  table.rows.resize(plan.points.size());
  for (size_t i = 0; i < plan.points.size(); ++i) {
    table.rows[i].point = plan.points[i];
    table.rows[i].params = params_at(plan.points[i]);
  }
  parallel_for(static_cast<int>(table.rows.size()), plan.workers,
               [&](int i) { fill_point(table.rows[static_cast<size_t>(i)], plan); });
  table.finished_at = iso8601_utc_now();
  return table;
}

}  // namespace

SweepTable sweep_drive(const SweepPlan& plan) {
  if (plan.axis != SweepAxis::drive)
    throw std::invalid_argument("sweep_drive: plan axis must be drive");
  return run_sweep(plan, [&plan](double ratio) {
    ModelParams p = plan.base;
    p.rabi = ratio * p.collective_unit();
    if (plan.perfect_squeezing) p = p.with_perfect_squeezing();
    return p;
  });
}

SweepTable sweep_squeeze(const SweepPlan& plan) {
  if (plan.axis != SweepAxis::n_bar)
    throw std::invalid_argument("sweep_squeeze: plan axis must be n_bar");
  return run_sweep(plan, [&plan](double n_bar) {
    ModelParams p = plan.base;
    p.n_bar = n_bar;
    p.m_abs = plan.perfect_squeezing ? std::sqrt(n_bar * (n_bar + 1.0)) : p.m_abs;
    return p;
  });
}

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("fit_line: need >= 2 matching points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double denom = n * sxx - sx * sx;
  LinearFit fit;
  fit.slope = (n * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / n;
  double ssr = 0, sstot = 0;
  const double ymean = sy / n;
  for (size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    ssr += r * r;
    sstot += (y[i] - ymean) * (y[i] - ymean);
  }
  const double dof = std::max(1.0, n - 2.0);
  fit.residual_rms = std::sqrt(ssr / dof);
  fit.intercept_stderr = fit.residual_rms * std::sqrt(sxx / (n * sxx - sx * sx));
  fit.r_squared = sstot > 0 ? 1.0 - ssr / sstot : 1.0;
  return fit;
}

SizeScanResult finite_size_scan(const SweepPlan& plan) {
  if (plan.axis != SweepAxis::size)
    throw std::invalid_argument("finite_size_scan: plan axis must be size");
  const double unit = plan.base.collective_unit();
  const double ratio = plan.base.drive_ratio();

  SweepPlan scan_plan = plan;
  scan_plan.want_gaps = true;
  // enough oscillatory families for the first 12 imaginary parts
  scan_plan.n_harmonics = std::max(plan.n_harmonics, 4);
  SweepTable table = run_sweep(scan_plan, [&](double n_value) {
    const int n = static_cast<int>(std::lround(n_value));
    ModelParams p = plan.base;
    p.n_atoms = n;
    p.gamma = 2.0 * unit / n;  // Gamma ~ 1/N keeps N*Gamma/2 fixed
    p.rabi = ratio * unit;
    if (plan.perfect_squeezing) p = p.with_perfect_squeezing();
    return p;
  });

  // Representatives per N: nonzero eigenvalues, conjugate pairs collapsed to
  // their Im >= 0 member, ordered by |Re|.
  const double zero_tol = 1e-8;
  std::vector<std::vector<Complex>> reps(table.rows.size());
  std::vector<double> radius(table.rows.size(), 0.25);
  for (size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    if (!row.error.empty()) continue;
    for (const Complex ev : row.eigenvalues) {
      if (std::abs(ev.real()) <= zero_tol && std::abs(ev.imag()) <= zero_tol) continue;
      if (ev.imag() < -plan.spectral.im_zero_tolerance) continue;
      reps[r].push_back(ev);
    }
    std::sort(reps[r].begin(), reps[r].end(), [](const Complex& a, const Complex& b) {
      return std::abs(a.real()) < std::abs(b.real());
    });
    if (row.gaps.delta_omega) radius[r] = 0.5 * *row.gaps.delta_omega;
  }

  SizeScanResult result;
  result.table = std::move(table);
  if (reps.empty() || reps[0].empty()) return result;

  const int n_branches = static_cast<int>(std::min<size_t>(8, reps[0].size()));
  for (int b = 0; b < n_branches; ++b) {
    EigenBranch branch;
    Complex current = reps[0][static_cast<size_t>(b)];
    branch.n_values.push_back(result.table.rows[0].point);
    branch.lambdas.push_back(current);
    for (size_t r = 1; r < reps.size(); ++r) {
      if (reps[r].empty()) break;
      // The decay rates contract like 1/N while the frequencies stay put, so
      // plain nearest-neighbor matching systematically grabs the next family
      // member; predict the contraction before measuring distances.
      const double n_prev = result.table.rows[r - 1].point;
      const double n_next = result.table.rows[r].point;
      const Complex predicted(current.real() * n_prev / n_next, current.imag());
      size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity(), second_d = best_d;
      for (size_t i = 0; i < reps[r].size(); ++i) {
        const double dist = std::abs(reps[r][i] - predicted);
        if (dist < best_d) {
          second_d = best_d;
          best_d = dist;
          best = i;
        } else if (dist < second_d) {
          second_d = dist;
        }
      }
      if (best_d > radius[r]) break;  // branch lost
      if (second_d < 2.0 * best_d) branch.flagged = true;  // genuinely ambiguous
      current = reps[r][best];
      branch.n_values.push_back(result.table.rows[r].point);
      branch.lambdas.push_back(current);
    }

    branch.is_complex = std::any_of(branch.lambdas.begin(), branch.lambdas.end(),
                                    [&](const Complex& ev) {
                                      return std::abs(ev.imag()) > plan.spectral.im_zero_tolerance;
                                    });
    if (branch.n_values.size() >= 3) {
      std::vector<double> inv_n, abs_re;
      for (size_t i = 0; i < branch.n_values.size(); ++i) {
        inv_n.push_back(1.0 / branch.n_values[i]);
        abs_re.push_back(std::abs(branch.lambdas[i].real()));
      }
      branch.re_fit = fit_line(inv_n, abs_re);
    }
    result.branches.push_back(std::move(branch));
  }
  return result;
}

}  // namespace dicke
