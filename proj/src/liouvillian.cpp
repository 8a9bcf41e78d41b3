#include "dicke/liouvillian.hpp"

#include <cmath>

#include <unsupported/Eigen/KroneckerProduct>

namespace dicke {

namespace {

SparseMatrix sparse_from_dense(const Matrix& m, double prune_tol = 0.0) {
  return m.sparseView(1.0, prune_tol);
}

// (B^T (x) A) for the term A rho B under column stacking.
SparseMatrix sandwich(const SparseMatrix& a, const SparseMatrix& b) {
  SparseMatrix bt = SparseMatrix(b.transpose());
  return Eigen::kroneckerProduct(bt, a).eval();
}

SparseMatrix left_mult(const SparseMatrix& a, int d) {
  SparseMatrix id(d, d);
  id.setIdentity();
  return Eigen::kroneckerProduct(id, a).eval();
}

SparseMatrix right_mult(const SparseMatrix& b, int d) {
  SparseMatrix id(d, d);
  id.setIdentity();
  SparseMatrix bt = SparseMatrix(b.transpose());
  return Eigen::kroneckerProduct(bt, id).eval();
}

}  // namespace

ModelParams ModelParams::from_drive_ratio(int n_atoms, double drive_ratio, double n_bar,
                                          double drive_phase, double squeeze_phase) {
  ModelParams p;
  p.n_atoms = n_atoms;
  p.gamma = 2.0 / n_atoms;  // N*Gamma/2 = 1
  p.rabi = drive_ratio;
  p.n_bar = n_bar;
  p.m_abs = std::sqrt(n_bar * (n_bar + 1.0));
  p.drive_phase = drive_phase;
  p.squeeze_phase = squeeze_phase;
  return p;
}

ModelParams ModelParams::with_perfect_squeezing() const {
  ModelParams p = *this;
  p.m_abs = std::sqrt(n_bar * (n_bar + 1.0));
  return p;
}

void ModelParams::validate() const {
  if (n_atoms < 1) throw std::invalid_argument("ModelParams: n_atoms must be >= 1");
  if (gamma <= 0) throw std::invalid_argument("ModelParams: gamma must be > 0");
  if (rabi < 0) throw std::invalid_argument("ModelParams: rabi must be >= 0");
  if (n_bar < 0) throw std::invalid_argument("ModelParams: n_bar must be >= 0");
  if (m_abs < 0) throw std::invalid_argument("ModelParams: m_abs must be >= 0");
  if (m_abs * m_abs > n_bar * (n_bar + 1.0) + 1e-12)
    throw std::invalid_argument(
        "ModelParams: |m|^2 exceeds n_bar (n_bar + 1); the reservoir would not be physical");
}

Superoperator build_liouvillian(const ModelParams& params, int atom_cap) {
  params.validate();
  const SpinOperators ops = build_spin_operators(params.n_atoms, atom_cap);
  const int d = ops.dim;
  const Complex I(0, 1);

  const SparseMatrix sp = sparse_from_dense(ops.s_plus);
  const SparseMatrix sm = sparse_from_dense(ops.s_minus);
  const SparseMatrix pm = (sp * sm).pruned();  // S+S-
  const SparseMatrix mp = (sm * sp).pruned();  // S-S+
  const SparseMatrix pp = (sp * sp).pruned();
  const SparseMatrix mm = (sm * sm).pruned();

  const Complex eip = std::polar(1.0, params.drive_phase);
  const SparseMatrix h = (params.rabi * (eip * sp + std::conj(eip) * sm)).pruned();

  // Phase-sensitive rates: m appears as |m| e^{-i phi} on the S+S+ line and
  // |m| e^{+i phi} on the S-S- line, which keeps L hermiticity-preserving.
  const double g = params.gamma;
  const Complex c_down = g * (1.0 + params.n_bar);
  const Complex c_up = g * params.n_bar;
  const Complex c_pp = g * params.m_abs * std::polar(1.0, -params.squeeze_phase);
  const Complex c_mm = g * params.m_abs * std::polar(1.0, params.squeeze_phase);

  auto dissipator = [&](const SparseMatrix& prod, const SparseMatrix& left,
                        const SparseMatrix& right) {
    // -(A B rho - 2 B rho A + rho A B) with prod = A B, sandwich = B rho A.
    return SparseMatrix(2.0 * sandwich(left, right) - left_mult(prod, d) -
                        right_mult(prod, d));
  };

  SparseMatrix L =
      I * (left_mult(h, d) - right_mult(h, d)) + c_down * dissipator(pm, sm, sp) +
      c_up * dissipator(mp, sp, sm) + c_pp * dissipator(pp, sp, sp) +
      c_mm * dissipator(mm, sm, sm);
  L.makeCompressed();

  Superoperator sop;
  sop.atom_dim = d;
  sop.dim = d * d;
  sop.energy_unit = params.collective_unit();
  sop.entries = std::move(L);
  return sop;
}

MasterEquation::MasterEquation(const ModelParams& params, int atom_cap)
    : params_(params) {
  params.validate();
  if (params.n_atoms > atom_cap)
    throw SizeError("MasterEquation: n_atoms exceeds cap " + std::to_string(atom_cap));
  dim_ = params.n_atoms + 1;
  const double j = 0.5 * params.n_atoms;
  ladder_ = RealVector::Zero(dim_);
  for (int k = 0; k < dim_ - 1; ++k) {
    const double m = j - (k + 1);  // S+ maps column k+1 up to row k
    ladder_(k) = std::sqrt(j * (j + 1) - m * (m + 1));
  }
  drive_amp_ = params.rabi * std::polar(1.0, params.drive_phase);

  const double g = params.gamma;
  coeff_down_ = g * (1.0 + params.n_bar);
  coeff_up_ = g * params.n_bar;
  coeff_pp_ = g * params.m_abs * std::polar(1.0, -params.squeeze_phase);
  coeff_mm_ = g * params.m_abs * std::polar(1.0, params.squeeze_phase);
}

void MasterEquation::apply_into(const Matrix& rho, Matrix& drho) const {
  require_same_dim(rho.rows(), dim_, "MasterEquation::apply");
  require_same_dim(rho.cols(), dim_, "MasterEquation::apply");
  const int d = dim_;
  drho.resize(d, d);
  const Complex I(0, 1);
  const Complex de = drive_amp_;
  const Complex dec = std::conj(drive_amp_);

  // c(k) = <k|S+|k+1>; the whole generator is a 13-point stencil on rho.
  auto c = [&](int k) -> double { return (k >= 0 && k < d - 1) ? ladder_(k) : 0.0; };
  auto r = [&](int a, int b) -> Complex {
    return (a >= 0 && a < d && b >= 0 && b < d) ? rho(a, b) : Complex(0, 0);
  };

  for (int b = 0; b < d; ++b) {
    const double cb = c(b), cb1 = c(b - 1);
    for (int a = 0; a < d; ++a) {
      const double ca = c(a), ca1 = c(a - 1);
      Complex acc = I * (de * (ca * r(a + 1, b)) + dec * (ca1 * r(a - 1, b)) -
                         de * (cb1 * r(a, b - 1)) - dec * (cb * r(a, b + 1)));
      acc += coeff_down_ *
             (2.0 * ca1 * cb1 * r(a - 1, b - 1) - (ca * ca + cb * cb) * rho(a, b));
      acc += coeff_up_ *
             (2.0 * ca * cb * r(a + 1, b + 1) - (ca1 * ca1 + cb1 * cb1) * rho(a, b));
      acc += coeff_pp_ * (2.0 * ca * cb1 * r(a + 1, b - 1) - ca * c(a + 1) * r(a + 2, b) -
                          c(b - 2) * cb1 * r(a, b - 2));
      acc += coeff_mm_ * (2.0 * ca1 * cb * r(a - 1, b + 1) - c(a - 2) * ca1 * r(a - 2, b) -
                          cb * c(b + 1) * r(a, b + 2));
      drho(a, b) = acc;
    }
  }
}

Matrix MasterEquation::apply(const Matrix& rho) const {
  Matrix drho;
  apply_into(rho, drho);
  return drho;
}

Matrix apply_rhs(const ModelParams& params, const DensityMatrix& rho) {
  MasterEquation eq(params);
  require_same_dim(rho.data.rows(), eq.dim(), "apply_rhs");
  return eq.apply(rho.data);
}

}  // namespace dicke
