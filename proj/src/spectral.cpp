#include "dicke/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>

#include <Eigen/SparseLU>

// Classic Fortran LAPACK interface; hidden string lengths are unused by zgeev.
extern "C" void zgeev_(const char* jobvl, const char* jobvr, const int* n,
                       std::complex<double>* a, const int* lda, std::complex<double>* w,
                       std::complex<double>* vl, const int* ldvl, std::complex<double>* vr,
                       const int* ldvr, std::complex<double>* work, const int* lwork,
                       double* rwork, int* info);

namespace dicke {

namespace {

// Eigenvalues (and optionally right eigenvectors) of a dense complex matrix.
void dense_eigensolve(Matrix a, std::vector<Complex>& values, Matrix* vectors) {
  const int n = static_cast<int>(a.rows());
  values.resize(static_cast<size_t>(n));
  Matrix vr;
  if (vectors) vr.resize(n, n);
  const char jobvl = 'N';
  const char jobvr = vectors ? 'V' : 'N';
  const int ldvl = 1;
  const int ldvr = vectors ? n : 1;
  std::vector<double> rwork(static_cast<size_t>(2 * n));
  int info = 0;
  int lwork = -1;
  Complex wkopt;
  zgeev_(&jobvl, &jobvr, &n, a.data(), &n, values.data(), nullptr, &ldvl,
         vectors ? vr.data() : nullptr, &ldvr, &wkopt, &lwork, rwork.data(), &info);
  lwork = static_cast<int>(wkopt.real());
  std::vector<Complex> work(static_cast<size_t>(lwork));
  zgeev_(&jobvl, &jobvr, &n, a.data(), &n, values.data(), nullptr, &ldvl,
         vectors ? vr.data() : nullptr, &ldvr, work.data(), &lwork, rwork.data(), &info);
  if (info != 0)
    throw ConvergenceError("zgeev failed with info = " + std::to_string(info));
  if (vectors) *vectors = std::move(vr);
}

bool spectral_order(const Complex& a, const Complex& b) {
  const double ra = std::abs(a.real()), rb = std::abs(b.real());
  if (ra != rb) return ra < rb;
  return a.imag() < b.imag();
}

// Sorts eigenvalues (and matching eigenvector columns) by ascending |Re|,
// ties by ascending Im, keeping conjugate pairs adjacent.
void sort_pairs(std::vector<Complex>& values, Matrix* vectors) {
  std::vector<int> order(values.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(),
                   [&](int i, int j) { return spectral_order(values[i], values[j]); });
  std::vector<Complex> sorted(values.size());
  for (size_t i = 0; i < order.size(); ++i) sorted[i] = values[static_cast<size_t>(order[i])];
  values = std::move(sorted);
  if (vectors) {
    Matrix v(vectors->rows(), vectors->cols());
    for (size_t i = 0; i < order.size(); ++i)
      v.col(static_cast<Eigen::Index>(i)) = vectors->col(order[i]);
    *vectors = std::move(v);
  }
}

// Deterministic pseudo-random start vector for the Krylov iteration.
Vector deterministic_start(int n) {
  Vector v(n);
  uint64_t state = 0x9e3779b97f4a7c15ull;
  auto next = [&state]() {
    state = state * 6364136223846793005ull + 1442695040888963407ull;
    return static_cast<double>(state >> 11) / 9007199254740992.0 - 0.5;
  };
  for (int i = 0; i < n; ++i) v(i) = Complex(next(), next());
  v.normalize();
  return v;
}

struct RitzPair {
  Complex lambda;
  Vector vector;
  double residual;
};

// Shift-invert Arnoldi: eigenvalues of L nearest sigma via Krylov iteration on
// (L - sigma I)^{-1}.  Residuals are checked explicitly against L.
std::vector<RitzPair> shift_invert_arnoldi(const SparseMatrix& L, double unit,
                                           Complex sigma, int k, double residual_tol,
                                           int max_krylov, std::string& diagnostics) {
  const int n = static_cast<int>(L.rows());
  SparseMatrix id(n, n);
  id.setIdentity();
  SparseMatrix shifted = L - sigma * id;
  shifted.makeCompressed();

  Eigen::SparseLU<SparseMatrix> lu;
  lu.analyzePattern(shifted);
  lu.factorize(shifted);
  if (lu.info() != Eigen::Success)
    throw ConvergenceError("shift-invert factorization failed at shift (" +
                           std::to_string(sigma.real()) + ", " +
                           std::to_string(sigma.imag()) + ")");
  {
    // A shift sitting on an eigenvalue (e.g. the steady state at 0) leaves the
    // factorization numerically singular; the huge amplification then poisons
    // the Krylov orthogonalization.  Detect it and ask the caller to perturb.
    const double amplification = lu.solve(deterministic_start(n)).norm();
    if (!std::isfinite(amplification) || amplification > 1e10 / unit)
      throw ConvergenceError("shift-invert: shift is numerically on an eigenvalue");
  }

  max_krylov = std::min(max_krylov, n);
  int m_target = std::min(std::max(2 * k + 20, 40), max_krylov);

  Matrix v(n, m_target + 1);
  Matrix h = Matrix::Zero(m_target + 1, m_target);
  v.col(0) = deterministic_start(n);
  int m = 0;
  bool breakdown = false;

  auto extend_basis = [&](int target) {
    if (v.cols() < target + 1) v.conservativeResize(Eigen::NoChange, target + 1);
    if (h.cols() < target) {
      Matrix grown = Matrix::Zero(target + 1, target);
      grown.topLeftCorner(h.rows(), h.cols()) = h;
      h = std::move(grown);
    }
    for (; m < target && !breakdown; ++m) {
      Vector w = lu.solve(v.col(m));
      // modified Gram-Schmidt with one re-orthogonalization pass
      for (int pass = 0; pass < 2; ++pass) {
        for (int i = 0; i <= m; ++i) {
          const Complex c = v.col(i).dot(w);
          if (pass == 0)
            h(i, m) = c;
          else
            h(i, m) += c;
          w -= c * v.col(i);
        }
      }
      const double norm = w.norm();
      h(m + 1, m) = norm;
      if (norm < 1e-14) {
        breakdown = true;
        ++m;
        break;
      }
      v.col(m + 1) = w / norm;
    }
  };

  std::vector<RitzPair> result;
  while (true) {
    extend_basis(m_target);
    const int mm = breakdown ? m : m_target;

    // Ritz pairs of the transformed operator; theta large <=> lambda near sigma.
    Eigen::ComplexEigenSolver<Matrix> es(h.topLeftCorner(mm, mm));
    std::vector<int> idx(static_cast<size_t>(mm));
    for (int i = 0; i < mm; ++i) idx[static_cast<size_t>(i)] = i;
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
      return std::abs(es.eigenvalues()(a)) > std::abs(es.eigenvalues()(b));
    });

    int take = std::min(k, mm);
    // Keep conjugate pairs together at the selection boundary.
    if (take < mm) {
      const Complex last = sigma + 1.0 / es.eigenvalues()(idx[static_cast<size_t>(take - 1)]);
      const Complex next = sigma + 1.0 / es.eigenvalues()(idx[static_cast<size_t>(take)]);
      if (std::abs(next - std::conj(last)) < 1e-6 * unit && std::abs(last.imag()) > 1e-12 * unit)
        ++take;
    }

    result.clear();
    bool all_converged = true;
    double worst = 0.0;
    for (int t = 0; t < take; ++t) {
      const int i = idx[static_cast<size_t>(t)];
      const Complex theta = es.eigenvalues()(i);
      if (std::abs(theta) < 1e-300) {
        all_converged = false;
        continue;
      }
      const Complex lambda = sigma + 1.0 / theta;
      Vector x = v.leftCols(mm) * es.eigenvectors().col(i);
      x.normalize();
      const double resid = (L * x - lambda * x).norm() / unit;
      worst = std::max(worst, resid);
      result.push_back({lambda, std::move(x), resid});
      all_converged = all_converged && resid <= residual_tol;
    }

    if (all_converged && static_cast<int>(result.size()) >= std::min(k, mm)) return result;
    if (breakdown || m_target >= max_krylov) {
      char msg[160];
      std::snprintf(msg, sizeof(msg),
                    "Arnoldi did not converge: k=%d, subspace %d, worst residual %.3e "
                    "(tol %.1e)",
                    k, mm, worst, residual_tol);
      diagnostics = msg;
      throw ConvergenceError(diagnostics);
    }
    m_target = std::min(max_krylov, m_target + std::max(20, m_target / 2));
  }
}

double sparse_inf_norm(const SparseMatrix& m) {
  RealVector row_sums = RealVector::Zero(m.rows());
  for (int col = 0; col < m.outerSize(); ++col)
    for (SparseMatrix::InnerIterator it(m, col); it; ++it)
      row_sums(it.row()) += std::abs(it.value());
  return row_sums.maxCoeff();
}

}  // namespace

GapSummary classify_gaps(const SpectrumResult& spectrum, double im_zero_tolerance) {
  const auto& evs = spectrum.eigenvalues;
  if (evs.size() < 3)
    throw std::invalid_argument("classify_gaps: need the zero eigenvalue plus at least two others");
  if (std::abs(evs[0].real()) > 1e-8 || std::abs(evs[0].imag()) > 1e-8)
    throw std::invalid_argument("classify_gaps: spectrum does not contain the zero eigenvalue");

  GapSummary gaps;
  gaps.im_zero_tolerance = im_zero_tolerance;
  for (size_t i = 1; i < evs.size(); ++i) {
    const Complex ev = evs[i];
    const bool oscillatory = std::abs(ev.imag()) > im_zero_tolerance;
    if (oscillatory) {
      // delta_omega is the first nonzero imaginary part in the |Re| ordering,
      // i.e. the oscillation frequency of the slowest oscillatory mode.
      if (!gaps.delta_1) {
        gaps.delta_1 = std::abs(ev.real());
        gaps.delta_omega = std::abs(ev.imag());
      }
    } else if (!gaps.delta_2) {
      // skip further copies of the zero mode, should one appear
      if (std::abs(ev.real()) > 1e-12 || std::abs(ev.imag()) > 1e-12)
        gaps.delta_2 = std::abs(ev.real());
    }
  }
  return gaps;
}

SpectrumResult full_spectrum(const Superoperator& L, const SpectralConfig& cfg) {
  if (L.dim > cfg.dense_cap)
    throw SizeError("full_spectrum: D = " + std::to_string(L.dim) + " exceeds dense cap " +
                    std::to_string(cfg.dense_cap) + "; use low_lying_spectrum");

  Matrix dense = Matrix(L.entries) / L.energy_unit;
  std::vector<Complex> values;
  Matrix vectors;
  dense_eigensolve(std::move(dense), values, cfg.keep_eigenvectors ? &vectors : nullptr);
  sort_pairs(values, cfg.keep_eigenvectors ? &vectors : nullptr);

  SpectrumResult res;
  res.eigenvalues = std::move(values);
  res.n_requested = L.dim;
  res.method = SpectrumMethod::dense;
  if (cfg.keep_eigenvectors) res.eigenvectors = std::move(vectors);
  res.gaps = classify_gaps(res, cfg.im_zero_tolerance);
  return res;
}

SpectrumResult low_lying_spectrum(const Superoperator& L, int k, Complex shift,
                                  const SpectralConfig& cfg) {
  if (k < 1) throw std::invalid_argument("low_lying_spectrum: k must be >= 1");
  k = std::min(k, L.dim - 2);

  const Complex sigma0 = shift * L.energy_unit;
  std::string diagnostics;
  std::vector<RitzPair> pairs;
  // A shift landing on an eigenvalue makes the factorization singular; retry
  // with small offsets before giving up.
  const Complex offsets[] = {Complex(0, 0), Complex(-1e-6, 0) * L.energy_unit,
                             Complex(-1e-6, 3e-6) * L.energy_unit};
  size_t attempt = 0;
  while (true) {
    try {
      pairs = shift_invert_arnoldi(L.entries, L.energy_unit, sigma0 + offsets[attempt], k,
                                   cfg.residual_tol, cfg.max_krylov, diagnostics);
      break;
    } catch (const ConvergenceError&) {
      if (++attempt >= std::size(offsets)) throw;
    }
  }

  // Hermiticity preservation pairs every eigenvalue lambda (eigenmatrix r)
  // with lambda* (eigenmatrix r^dag), so a complex shift may legitimately
  // return one member only; complete the pairs before sorting.
  {
    const int d = L.atom_dim;
    const size_t found = pairs.size();
    for (size_t i = 0; i < found; ++i) {
      if (std::abs(pairs[i].lambda.imag()) <= 1e-12 * L.energy_unit) continue;
      const Complex conj_ev = std::conj(pairs[i].lambda);
      bool present = false;
      for (const auto& other : pairs)
        if (std::abs(other.lambda - conj_ev) <= 1e-9 * L.energy_unit) present = true;
      if (present) continue;
      Eigen::Map<const Matrix> r(pairs[i].vector.data(), d, d);
      Matrix radj = r.adjoint();
      Vector v = Eigen::Map<Vector>(radj.data(), L.dim);
      pairs.push_back({conj_ev, std::move(v), pairs[i].residual});
    }
  }

  std::vector<Complex> values;
  values.reserve(pairs.size());
  Matrix vectors;
  if (cfg.keep_eigenvectors) vectors.resize(L.dim, static_cast<Eigen::Index>(pairs.size()));
  for (size_t i = 0; i < pairs.size(); ++i) {
    values.push_back(pairs[i].lambda / L.energy_unit);
    if (cfg.keep_eigenvectors) vectors.col(static_cast<Eigen::Index>(i)) = pairs[i].vector;
  }
  sort_pairs(values, cfg.keep_eigenvectors ? &vectors : nullptr);

  SpectrumResult res;
  res.eigenvalues = std::move(values);
  res.n_requested = k;
  res.method = SpectrumMethod::shift_invert;
  if (cfg.keep_eigenvectors) res.eigenvectors = std::move(vectors);
  // a window away from zero need not contain the steady-state eigenvalue
  const bool has_zero = !res.eigenvalues.empty() &&
                        std::abs(res.eigenvalues[0].real()) <= 1e-8 &&
                        std::abs(res.eigenvalues[0].imag()) <= 1e-8;
  if (has_zero && res.eigenvalues.size() >= 3)
    res.gaps = classify_gaps(res, cfg.im_zero_tolerance);
  else
    res.gaps.im_zero_tolerance = cfg.im_zero_tolerance;
  return res;
}

SpectrumResult gap_spectrum(const Superoperator& L, int k_per_shift, int n_harmonics,
                            const SpectralConfig& cfg) {
  if (k_per_shift < 2) throw std::invalid_argument("gap_spectrum: k_per_shift must be >= 2");
  SpectralConfig pass_cfg = cfg;
  pass_cfg.keep_eigenvectors = false;
  pass_cfg.max_krylov = std::min(cfg.max_krylov, 320);

  std::vector<Complex> values;
  auto merge = [&](const std::vector<Complex>& more) {
    for (const Complex ev : more) {
      bool dup = false;
      for (const Complex have : values)
        if (std::abs(have - ev) <= 1e-7 * std::max(1.0, std::abs(have))) dup = true;
      if (!dup) values.push_back(ev);
    }
  };

  // A window boundary can land inside a cluster and stall the iteration; a
  // narrower window around the same shift still resolves the gap physics.
  auto run_pass = [&](int k_pass, Complex shift, bool required) {
    int k_try = std::min(k_pass, L.dim - 2);
    while (true) {
      try {
        merge(low_lying_spectrum(L, k_try, shift, pass_cfg).eigenvalues);
        return;
      } catch (const ConvergenceError&) {
        if (k_try <= 3) {
          if (required) throw;
          return;
        }
        k_try = std::max(3, k_try / 2);
      }
    }
  };

  // Pass 1: the steady state and the first rungs of the real relaxation
  // ladder.  Kept small: ladder eigenpairs far from the shift are badly
  // conditioned and stall the iteration, so the deeper rungs come from a
  // second pass shifted into the ladder instead.
  run_pass(std::min(k_per_shift, 4), Complex(0, 0), true);
  if (k_per_shift > 4) {
    double d2_est = 0.0;
    for (const Complex ev : values)
      if (std::abs(ev.imag()) <= cfg.im_zero_tolerance && std::abs(ev.real()) > 1e-8)
        if (d2_est == 0.0 || std::abs(ev.real()) < d2_est) d2_est = std::abs(ev.real());
    if (d2_est > 0)
      run_pass(std::min(k_per_shift, 6), Complex(-5.0 * d2_est, 0), false);
  }

  // Oscillatory families live near integer multiples of the (unknown) spectral
  // bandwidth, well away from zero; probe up the imaginary axis to locate them.
  auto first_oscillatory = [&]() -> std::optional<Complex> {
    std::optional<Complex> best;
    for (const Complex ev : values)
      if (std::abs(ev.imag()) > cfg.im_zero_tolerance)
        if (!best || std::abs(ev.real()) < std::abs(best->real())) best = ev;
    return best;
  };

  if (!first_oscillatory()) {
    for (double probe = 1.0; probe <= cfg.max_probe_frequency; probe *= 2.0) {
      run_pass(4, Complex(0, probe), false);
      if (first_oscillatory()) break;
    }
  }

  if (const auto osc = first_oscillatory()) {
    const double base_freq = std::abs(osc->imag());
    for (int q = 1; q <= n_harmonics; ++q)
      run_pass(k_per_shift, Complex(0, q * base_freq), false);
  }

  sort_pairs(values, nullptr);
  SpectrumResult res;
  res.eigenvalues = std::move(values);
  res.n_requested = k_per_shift;
  res.method = SpectrumMethod::shift_invert;
  res.gaps = classify_gaps(res, cfg.im_zero_tolerance);
  return res;
}

DensityMatrix steady_state(const Superoperator& L, const SpectralConfig& cfg) {
  const int d = L.atom_dim;
  const int D = L.dim;
  const double norm_inf = sparse_inf_norm(L.entries);

  // Pin the trace constraint into one row of L and solve M x = e_row; the
  // candidate rows are diagonal vec-indices in case a pinned row happens to be
  // linearly independent of the rest.
  const int candidates[] = {0, D - 1, (d / 2) * d + (d / 2)};
  Vector solution;
  bool solved = false;
  double best_residual = std::numeric_limits<double>::infinity();
  for (const int pin : candidates) {
    std::vector<Triplet> trip;
    trip.reserve(static_cast<size_t>(L.entries.nonZeros()) + static_cast<size_t>(d));
    for (int col = 0; col < L.entries.outerSize(); ++col)
      for (SparseMatrix::InnerIterator it(L.entries, col); it; ++it)
        if (it.row() != pin) trip.emplace_back(static_cast<int>(it.row()), col, it.value());
    for (int i = 0; i < d; ++i) trip.emplace_back(pin, i * d + i, Complex(1, 0));
    SparseMatrix m(D, D);
    m.setFromTriplets(trip.begin(), trip.end());
    m.makeCompressed();

    Eigen::SparseLU<SparseMatrix> lu;
    lu.analyzePattern(m);
    lu.factorize(m);
    if (lu.info() != Eigen::Success) continue;
    Vector rhs = Vector::Zero(D);
    rhs(pin) = 1.0;
    Vector x = lu.solve(rhs);
    if (!x.allFinite()) continue;
    const double residual = (L.entries * x).cwiseAbs().maxCoeff();
    best_residual = std::min(best_residual, residual);
    if (residual <= cfg.steady_residual_tol * norm_inf) {
      solution = std::move(x);
      solved = true;
      break;
    }
  }

  if (!solved || cfg.check_uniqueness) {
    // Degeneracy probe: inverse iteration restricted to the traceless
    // subspace, which is invariant under L and excludes the known steady
    // state.  A second null vector makes the iteration grow like 1/eps; a
    // unique steady state keeps it bounded by 1/Delta.  A coarse magnitude
    // decision suffices, so no eigenpair residuals are needed (the cascade
    // far below threshold is too non-normal for cheap converged eigenpairs).
    const double eps = 1e-7 * L.energy_unit;
    SparseMatrix shifted = L.entries;
    SparseMatrix id(D, D);
    id.setIdentity();
    shifted = L.entries - Complex(-eps, 0) * id;
    Eigen::SparseLU<SparseMatrix> lu;
    lu.analyzePattern(shifted);
    lu.factorize(shifted);
    double growth = 0.0;
    if (lu.info() == Eigen::Success) {
      Vector trace_dir = Vector::Zero(D);
      for (int i = 0; i < d; ++i) trace_dir(i * d + i) = 1.0;
      trace_dir /= trace_dir.norm();
      Vector w = deterministic_start(D);
      w -= trace_dir * trace_dir.dot(w);
      w.normalize();
      for (int iter = 0; iter < 50; ++iter) {
        Vector next = lu.solve(w);
        next -= trace_dir * trace_dir.dot(next);
        growth = next.norm();
        if (!std::isfinite(growth)) break;
        w = next / growth;
      }
    }
    if (!std::isfinite(growth) || growth * L.energy_unit > 1e5)
      throw MultiplicityError(
          "steady_state: a second eigenvalue sits within ~1e-5 of zero "
          "(degenerate steady states)");
    if (!solved)
      throw ConvergenceError("steady_state: pinned-trace solve residual " +
                             std::to_string(best_residual) + " exceeds tolerance " +
                             std::to_string(cfg.steady_residual_tol * norm_inf));
  }

  Matrix rho = Eigen::Map<Matrix>(solution.data(), d, d);
  rho = 0.5 * (rho + rho.adjoint()).eval();
  rho /= rho.trace().real();
  return {d, std::move(rho)};
}

}  // namespace dicke
