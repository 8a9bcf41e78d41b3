#include "dicke/observables.hpp"

#include <cmath>
#include <mutex>
#include <vector>

#include "dicke/parallel.hpp"

namespace dicke {

namespace {

// log(n!) in extended precision, grown on demand.
long double log_factorial(int n) {
  static std::vector<long double> table{0.0L, 0.0L};
  static std::mutex mu;
  if (n < 0) throw std::invalid_argument("log_factorial: negative argument");
  std::lock_guard<std::mutex> lock(mu);
  while (static_cast<int>(table.size()) <= n)
    table.push_back(table.back() + std::log(static_cast<long double>(table.size())));
  return table[static_cast<size_t>(n)];
}

}  // namespace

double clebsch_gordan(int two_j1, int two_m1, int two_j2, int two_m2, int two_J,
                      int two_M) {
  if (two_M != two_m1 + two_m2) return 0.0;
  if (std::abs(two_m1) > two_j1 || std::abs(two_m2) > two_j2 || std::abs(two_M) > two_J)
    return 0.0;
  if ((two_j1 + two_m1) % 2 != 0 || (two_j2 + two_m2) % 2 != 0 || (two_J + two_M) % 2 != 0)
    return 0.0;
  // triangle rule, and j1 + j2 + J must be an integer
  if (two_J < std::abs(two_j1 - two_j2) || two_J > two_j1 + two_j2) return 0.0;
  if ((two_j1 + two_j2 + two_J) % 2 != 0) return 0.0;

  const int g1 = (two_j1 + two_j2 - two_J) / 2;
  const int g2 = (two_j1 - two_j2 + two_J) / 2;
  const int g3 = (-two_j1 + two_j2 + two_J) / 2;
  const int g4 = (two_j1 + two_j2 + two_J) / 2 + 1;
  const int jm1 = (two_j1 - two_m1) / 2, jp1 = (two_j1 + two_m1) / 2;
  const int jm2 = (two_j2 - two_m2) / 2, jp2 = (two_j2 + two_m2) / 2;
  const int JM = (two_J - two_M) / 2, JP = (two_J + two_M) / 2;

  const long double log_pre =
      0.5L * (std::log(static_cast<long double>(two_J + 1)) + log_factorial(g1) +
              log_factorial(g2) + log_factorial(g3) - log_factorial(g4) +
              log_factorial(jm1) + log_factorial(jp1) + log_factorial(jm2) +
              log_factorial(jp2) + log_factorial(JM) + log_factorial(JP));

  // Racah sum over z; all six factorial arguments must stay nonnegative.
  const int t5 = (two_J - two_j2 + two_m1) / 2;
  const int t6 = (two_J - two_j1 - two_m2) / 2;
  const int z_min = std::max({0, -t5, -t6});
  const int z_max = std::min({g1, jm1, jp2});
  if (z_max < z_min) return 0.0;

  // scale by the largest term, then Kahan-sum the signed remainders
  long double l_max = -1e30L;
  for (int z = z_min; z <= z_max; ++z) {
    const long double l = log_pre - log_factorial(z) - log_factorial(g1 - z) -
                          log_factorial(jm1 - z) - log_factorial(jp2 - z) -
                          log_factorial(t5 + z) - log_factorial(t6 + z);
    l_max = std::max(l_max, l);
  }
  long double sum = 0.0L, comp = 0.0L;
  for (int z = z_min; z <= z_max; ++z) {
    const long double l = log_pre - log_factorial(z) - log_factorial(g1 - z) -
                          log_factorial(jm1 - z) - log_factorial(jp2 - z) -
                          log_factorial(t5 + z) - log_factorial(t6 + z);
    const long double term = ((z % 2) ? -1.0L : 1.0L) * std::exp(l - l_max);
    const long double y = term - comp;
    const long double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  return static_cast<double>(sum * std::exp(l_max));
}

Matrix tensor_operator(int two_j, int k, int q) {
  if (two_j < 0) throw std::invalid_argument("tensor_operator: two_j must be >= 0");
  if (k < 0 || k > two_j || std::abs(q) > k)
    throw std::invalid_argument("tensor_operator: need 0 <= k <= 2j and |q| <= k");
  const int d = two_j + 1;
  Matrix t = Matrix::Zero(d, d);
  // T_kq = sum_m (-1)^(j-m) <j m'; j -m | k q> |j m'><j m| with m' = m + q.
  // Index b holds m = j - b, so the bra index is a = b - q.
  for (int b = 0; b < d; ++b) {
    const int a = b - q;
    if (a < 0 || a >= d) continue;
    const int two_mp = two_j - 2 * a;
    const int two_m = two_j - 2 * b;
    const double cg = clebsch_gordan(two_j, two_mp, two_j, -two_m, 2 * k, 2 * q);
    t(a, b) = ((b % 2) ? -1.0 : 1.0) * cg;
  }
  return t;
}

OccupationDistribution occupation_distribution(const DensityMatrix& rho) {
  const int d = rho.dim;
  const double j = 0.5 * (d - 1);
  OccupationDistribution dist;
  dist.m_values.resize(static_cast<size_t>(d));
  dist.probabilities.resize(static_cast<size_t>(d));
  for (int i = 0; i < d; ++i) {
    dist.m_values[static_cast<size_t>(i)] = j - i;
    dist.probabilities[static_cast<size_t>(i)] = rho.data(i, i).real();
  }
  return dist;
}

double OccupationDistribution::participation_ratio() const {
  double s = 0.0;
  for (double p : probabilities) s += p * p;
  return 1.0 / s;
}

MultipoleTable multipole_components(const DensityMatrix& rho) {
  const int d = rho.dim;
  const int two_j = d - 1;
  MultipoleTable table;
  table.two_j = two_j;
  table.coeffs.resize(static_cast<size_t>(two_j) + 1);
  for (int k = 0; k <= two_j; ++k) {
    auto& row = table.coeffs[static_cast<size_t>(k)];
    row.assign(static_cast<size_t>(2 * k) + 1, Complex(0, 0));
    for (int q = -k; q <= k; ++q) {
      // rho_kq = Tr[rho T_kq^dag] = sum_ab rho(a,b) conj(T_kq(a,b)); the band
      // a = b - q is the only nonzero diagonal of T_kq.
      Complex acc(0, 0);
      for (int b = std::max(0, q); b < std::min(d, d + q); ++b) {
        const int a = b - q;
        const int two_mp = two_j - 2 * a;
        const int two_m = two_j - 2 * b;
        const double cg = clebsch_gordan(two_j, two_mp, two_j, -two_m, 2 * k, 2 * q);
        const double sign = (b % 2) ? -1.0 : 1.0;
        acc += rho.data(a, b) * (sign * cg);
      }
      row[static_cast<size_t>(q + k)] = acc;
    }
  }
  return table;
}

namespace {

// Fully normalized associated Legendre values Pbar_kq(theta) for fixed q,
// k = q..k_max, with Condon-Shortley phase; Y_kq = Pbar_kq e^{i q phi}.
void legendre_column(int q, int k_max, double cos_t, double sin_t,
                     std::vector<double>& out) {
  out.assign(static_cast<size_t>(k_max - q) + 1, 0.0);
  double pqq = std::sqrt(1.0 / (4.0 * M_PI));
  for (int i = 1; i <= q; ++i)
    pqq *= -std::sqrt((2.0 * i + 1.0) / (2.0 * i)) * sin_t;
  out[0] = pqq;
  if (k_max == q) return;
  double prev2 = pqq;
  double prev1 = std::sqrt(2.0 * q + 3.0) * cos_t * pqq;
  out[1] = prev1;
  for (int k = q + 2; k <= k_max; ++k) {
    const double kk = static_cast<double>(k);
    const double a = std::sqrt((4.0 * kk * kk - 1.0) / (kk * kk - q * q));
    const double b = std::sqrt(((kk - 1.0) * (kk - 1.0) - q * q) / (4.0 * (kk - 1.0) * (kk - 1.0) - 1.0));
    const double val = a * (cos_t * prev1 - b * prev2);
    out[static_cast<size_t>(k - q)] = val;
    prev2 = prev1;
    prev1 = val;
  }
}

}  // namespace

WignerMap spin_wigner(const DensityMatrix& rho, int n_theta, int n_phi, int workers) {
  if (n_theta < 16 || n_phi < 16)
    throw std::invalid_argument("spin_wigner: grid sizes must be >= 16");
  const int d = rho.dim;
  const int two_j = d - 1;
  const MultipoleTable table = multipole_components(rho);

  WignerMap map;
  map.theta_grid.resize(static_cast<size_t>(n_theta));
  map.phi_grid.resize(static_cast<size_t>(n_phi));
  for (int i = 0; i < n_theta; ++i)
    map.theta_grid[static_cast<size_t>(i)] = M_PI * i / (n_theta - 1);
  for (int p = 0; p < n_phi; ++p)
    map.phi_grid[static_cast<size_t>(p)] = 2.0 * M_PI * p / n_phi;
  map.values.resize(n_theta, n_phi);
  if (n_theta < 2 * two_j + 1)
    map.warning = "theta grid of " + std::to_string(n_theta) +
                  " points under-resolves harmonics of degree " + std::to_string(two_j) +
                  "; recommend n_theta >= " + std::to_string(2 * two_j + 1);

  // W = s * sum_kq rho_kq Ybar_kq, s fixed by the unit-integral normalization.
  const double scale = std::sqrt((two_j + 1.0) / (4.0 * M_PI));
  std::vector<double> imag_residue(static_cast<size_t>(n_theta), 0.0);

  parallel_for(n_theta, workers, [&](int ti) {
    const double theta = map.theta_grid[static_cast<size_t>(ti)];
    const double ct = std::cos(theta), st = std::sin(theta);
    // G_q(theta) = sum_k rho_kq Pbar_kq(theta) for q = -2j..2j
    std::vector<Complex> g(static_cast<size_t>(2 * two_j) + 1, Complex(0, 0));
    std::vector<double> pbar;
    for (int q = 0; q <= two_j; ++q) {
      legendre_column(q, two_j, ct, st, pbar);
      Complex acc_pos(0, 0), acc_neg(0, 0);
      for (int k = q; k <= two_j; ++k) {
        const double p = pbar[static_cast<size_t>(k - q)];
        acc_pos += table.get(k, q) * p;
        if (q > 0) {
          const double sign = (q % 2) ? -1.0 : 1.0;  // Pbar_{k,-q} = (-1)^q Pbar_kq
          acc_neg += table.get(k, -q) * (sign * p);
        }
      }
      g[static_cast<size_t>(two_j + q)] = acc_pos;
      if (q > 0) g[static_cast<size_t>(two_j - q)] = acc_neg;
    }

    double max_imag = 0.0;
    for (int p = 0; p < n_phi; ++p) {
      const double phi = map.phi_grid[static_cast<size_t>(p)];
      Complex w = g[static_cast<size_t>(two_j)];
      for (int q = 1; q <= two_j; ++q) {
        const Complex e = std::polar(1.0, q * phi);
        w += g[static_cast<size_t>(two_j + q)] * e +
             g[static_cast<size_t>(two_j - q)] * std::conj(e);
      }
      w *= scale;
      max_imag = std::max(max_imag, std::abs(w.imag()));
      map.values(ti, p) = w.real();
    }
    imag_residue[static_cast<size_t>(ti)] = max_imag;
  });

  for (double r : imag_residue) map.max_imag_residue = std::max(map.max_imag_residue, r);
  return map;
}

double WignerMap::spherical_integral() const {
  const int n_theta = static_cast<int>(theta_grid.size());
  const int n_phi = static_cast<int>(phi_grid.size());
  const double dphi = 2.0 * M_PI / n_phi;
  // The integrand sin(theta) * W is a sine polynomial on the uniform theta
  // grid; sine-transform weights integrate every mode of trig degree < n
  // exactly, unlike the trapezoid rule.
  const int n = n_theta - 1;
  double acc = 0.0;
  for (int i = 1; i < n; ++i) {
    const double theta = theta_grid[static_cast<size_t>(i)];
    double w = 0.0;
    for (int m = 1; m < n; m += 2) w += std::sin(m * theta) / m;
    w *= 4.0 / n;
    acc += w * std::sin(theta) * values.row(i).sum();
  }
  return acc * dphi;
}

std::pair<double, double> transverse_variances(const DensityMatrix& rho,
                                               const SpinOperators& ops) {
  require_same_dim(rho.dim, ops.dim, "transverse_variances");
  return {variance(ops.s_x, rho), variance(ops.s_y, rho)};
}

}  // namespace dicke
