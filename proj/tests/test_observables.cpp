#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unsupported/Eigen/MatrixFunctions>

#include "dicke/observables.hpp"
#include "dicke/spectral.hpp"
#include "oracles.hpp"

using namespace dicke;

TEST_CASE("clebsch_gordan against the exact small-j table") {
  for (const auto& c : oracles::exact_cg_cases()) {
    const double got =
        clebsch_gordan(c.two_j, c.two_m1, c.two_j, c.two_m2, c.two_K, c.two_M);
    CHECK(got == doctest::Approx(c.value).epsilon(1e-12));
  }
  // selection rules
  CHECK(clebsch_gordan(2, 2, 2, 2, 2, 4) == 0.0);   // M out of range for K
  CHECK(clebsch_gordan(2, 0, 2, 0, 8, 0) == 0.0);   // triangle violated
  CHECK(clebsch_gordan(2, 2, 2, 0, 4, 0) == 0.0);   // M != m1 + m2
}

TEST_CASE("tensor operators: orthonormality by brute-force Gram matrix") {
  for (int two_j : {2, 6, 12}) {  // j = 1, 3, 6
    std::vector<Matrix> all;
    for (int k = 0; k <= two_j; ++k)
      for (int q = -k; q <= k; ++q) all.push_back(tensor_operator(two_j, k, q));
    for (size_t a = 0; a < all.size(); ++a)
      for (size_t b = a; b < all.size(); ++b) {
        const Complex gram = (all[a].adjoint() * all[b]).trace();
        const double expected = (a == b) ? 1.0 : 0.0;
        CHECK(std::abs(gram - expected) < 1e-10);
      }
  }
}

TEST_CASE("tensor operators: T_00 and T_10 closed forms") {
  const int two_j = 2;  // j = 1
  const Matrix t00 = tensor_operator(two_j, 0, 0);
  CHECK((t00 - Matrix::Identity(3, 3) / std::sqrt(3.0)).cwiseAbs().maxCoeff() < 1e-12);

  const auto ops = build_spin_operators(2);
  const double j = 1.0;
  const Matrix t10_expected =
      std::sqrt(3.0 / (j * (j + 1) * (2 * j + 1))) * ops.s_z;
  CHECK((tensor_operator(two_j, 1, 0) - t10_expected).cwiseAbs().maxCoeff() < 1e-12);

  // adjoint relation T_kq^dag = (-1)^q T_{k,-q}
  for (int k = 0; k <= 2; ++k)
    for (int q = -k; q <= k; ++q) {
      const Matrix lhs = tensor_operator(two_j, k, q).adjoint();
      const Matrix rhs =
          ((q % 2 == 0) ? 1.0 : -1.0) * tensor_operator(two_j, k, -q);
      CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("tensor operators agree with the ladder construction at moderate j") {
  // the downward commutator ladder is itself unstable for large j, so this
  // cross-check stays at j <= 10 where both routes are accurate
  for (int two_j : {6, 14, 20}) {
    for (int k : {1, 2, two_j / 2, two_j}) {
      const auto family = oracles::ladder_tensor_family(two_j, k);
      double worst = 0.0;
      for (int q = -k; q <= k; ++q) {
        const Matrix t = tensor_operator(two_j, k, q);
        worst = std::max(
            worst, (t - family[static_cast<size_t>(q + k)]).cwiseAbs().maxCoeff());
      }
      INFO("two_j=", two_j, " k=", k);
      CHECK(worst < 1e-8);
    }
  }
}

TEST_CASE("clebsch_gordan at j = 50: completeness and closed forms") {
  const int two_j = 100;
  // unitarity of the coupling at fixed (m1, m2): sum over K of C^2 equals 1
  for (const auto& [two_m1, two_m2] : std::vector<std::pair<int, int>>{
           {100, -100}, {50, -50}, {0, 0}, {20, -18}, {-40, 36}, {100, -2}}) {
    double sum = 0.0;
    const int two_M = two_m1 + two_m2;
    for (int k = std::abs(two_M) / 2; k <= two_j; ++k) {
      const double c = clebsch_gordan(two_j, two_m1, two_j, two_m2, 2 * k, two_M);
      sum += c * c;
    }
    INFO("m1=", two_m1 / 2.0, " m2=", two_m2 / 2.0);
    // long-double Racah accumulation keeps ~1e-9 relative accuracy out here
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-8));
  }

  // T_10 is exactly Sz / ||Sz||_F at any j
  const auto ops = build_spin_operators(two_j);
  const double j = 0.5 * two_j;
  const Matrix t10_expected = std::sqrt(3.0 / (j * (j + 1) * (2 * j + 1))) * ops.s_z;
  CHECK((tensor_operator(two_j, 1, 0) - t10_expected).cwiseAbs().maxCoeff() < 1e-12);

  // sampled Gram matrix stays orthonormal, including high multipole orders
  const std::vector<std::pair<int, int>> sample = {
      {1, 0}, {2, 2}, {17, -5}, {50, 0}, {50, 25}, {99, 99}, {100, 0}, {100, -37}};
  for (size_t a = 0; a < sample.size(); ++a) {
    const Matrix ta = tensor_operator(two_j, sample[a].first, sample[a].second);
    for (size_t b = a; b < sample.size(); ++b) {
      const Matrix tb = tensor_operator(two_j, sample[b].first, sample[b].second);
      const Complex gram = (ta.adjoint() * tb).trace();
      const double expected = (a == b) ? 1.0 : 0.0;
      INFO("pair (", sample[a].first, ",", sample[a].second, ") x (", sample[b].first, ",",
           sample[b].second, ")");
      CHECK(std::abs(gram - expected) < 1e-7);
    }
  }
}

TEST_CASE("multipoles of simple states") {
  // maximally mixed: only rho_00 = 1/sqrt(2j+1) survives
  const auto mixed = maximally_mixed_state(4);
  const auto table = multipole_components(mixed);
  CHECK(std::abs(table.get(0, 0) - Complex(1.0 / std::sqrt(5.0), 0)) < 1e-12);
  for (int k = 1; k <= table.k_max(); ++k)
    for (int q = -k; q <= k; ++q) CHECK(std::abs(table.get(k, q)) < 1e-12);

  // |m=+j><m=+j| at j=1: rho_10 = j * sqrt(3/(j(j+1)(2j+1))) = 1/sqrt(2)
  DensityMatrix up{3, Matrix::Zero(3, 3)};
  up.data(0, 0) = 1.0;
  const auto t2 = multipole_components(up);
  CHECK(std::abs(t2.get(1, 0) - Complex(1.0 / std::sqrt(2.0), 0)) < 1e-12);

  // Hermitian rho: rho_{k,-q} = (-1)^q conj(rho_kq)
  const auto rho = oracles::random_density(7, 42);
  const auto t3 = multipole_components(rho);
  for (int k = 0; k <= t3.k_max(); ++k)
    for (int q = 0; q <= k; ++q) {
      const Complex a = t3.get(k, -q);
      const Complex b = ((q % 2 == 0) ? 1.0 : -1.0) * std::conj(t3.get(k, q));
      CHECK(std::abs(a - b) < 1e-10);
    }
}

TEST_CASE("occupation distribution") {
  const auto down = all_down_state(6);
  const auto dist = occupation_distribution(down);
  REQUIRE(dist.m_values.size() == 7);
  CHECK(dist.m_values.front() == doctest::Approx(3.0));
  CHECK(dist.m_values.back() == doctest::Approx(-3.0));
  CHECK(dist.probabilities.back() == doctest::Approx(1.0));
  CHECK(dist.participation_ratio() == doctest::Approx(1.0));

  const auto mixed = maximally_mixed_state(4);
  const auto d2 = occupation_distribution(mixed);
  for (double p : d2.probabilities) CHECK(p == doctest::Approx(0.2));
  CHECK(d2.participation_ratio() == doctest::Approx(5.0));
}

TEST_CASE("p_m reproduces <Sz> on steady states") {
  ModelParams p = ModelParams::from_drive_ratio(12, 1.1, 0.5);
  const auto rho = steady_state(build_liouvillian(p));
  const auto ops = build_spin_operators(12);
  const auto dist = occupation_distribution(rho);
  double sz = 0.0;
  for (size_t i = 0; i < dist.m_values.size(); ++i)
    sz += dist.m_values[i] * dist.probabilities[i];
  CHECK(sz == doctest::Approx(expectation(ops.s_z, rho).real()).epsilon(1e-10));
}

TEST_CASE("wigner map of the maximally mixed state is 1/(4 pi)") {
  const auto map = spin_wigner(maximally_mixed_state(8), 41, 64);
  for (int i = 0; i < map.values.rows(); ++i)
    for (int j = 0; j < map.values.cols(); ++j)
      CHECK(map.values(i, j) == doctest::Approx(1.0 / (4.0 * M_PI)).epsilon(1e-9));
  CHECK(map.spherical_integral() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(map.max_imag_residue < 1e-12);
}

TEST_CASE("wigner map of the all-down coherent state peaks at the south pole") {
  const auto map = spin_wigner(all_down_state(20), 91, 90);
  Eigen::Index imax = 0, jmax = 0;
  map.values.maxCoeff(&imax, &jmax);
  CHECK(map.theta_grid[static_cast<size_t>(imax)] == doctest::Approx(M_PI).epsilon(1e-9));
  CHECK(map.spherical_integral() == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("wigner reality and unit integral for random states up to N = 40") {
  for (int n : {10, 25, 40}) {
    const auto rho = oracles::random_density(n + 1, 300 + static_cast<unsigned>(n));
    const auto map = spin_wigner(rho, 4 * n + 1, 128);
    CHECK(map.max_imag_residue < 1e-9);
    CHECK(map.spherical_integral() == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(map.warning.empty());
  }
}

TEST_CASE("wigner linearity in rho") {
  const auto a = oracles::random_density(9, 91);
  const auto b = oracles::random_density(9, 92);
  DensityMatrix mix{9, 0.3 * a.data + 0.7 * b.data};
  const auto wa = spin_wigner(a, 33, 32), wb = spin_wigner(b, 33, 32),
             wm = spin_wigner(mix, 33, 32);
  const RealMatrix combo = 0.3 * wa.values + 0.7 * wb.values;
  CHECK((wm.values - combo).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("wigner rotational covariance about z") {
  // rotating rho by one phi grid step shifts the map by one column
  const int n = 10, n_phi = 36;
  const auto ops = build_spin_operators(n);
  // tipped coherent state: rotate all-down about y to break phi symmetry
  Matrix ry = (Complex(0, -1) * (M_PI / 3) * ops.s_y).exp();
  DensityMatrix tipped{n + 1, ry * all_down_state(n).data * ry.adjoint()};

  const double alpha = 2.0 * M_PI / n_phi;
  Matrix rz = (Complex(0, -1) * alpha * ops.s_z).exp();
  DensityMatrix rotated{n + 1, rz * tipped.data * rz.adjoint()};

  const auto w0 = spin_wigner(tipped, 41, n_phi);
  const auto w1 = spin_wigner(rotated, 41, n_phi);
  for (int i = 0; i < w0.values.rows(); ++i)
    for (int j = 0; j < n_phi; ++j)
      CHECK(w1.values(i, (j + 1) % n_phi) ==
            doctest::Approx(w0.values(i, j)).epsilon(1e-6).scale(1.0));
}

TEST_CASE("grid warning for under-resolved harmonics") {
  const auto map = spin_wigner(all_down_state(30), 41, 64);  // needs >= 121
  CHECK(!map.warning.empty());
  CHECK_THROWS_AS(spin_wigner(all_down_state(4), 8, 64), std::invalid_argument);
}

TEST_CASE("transverse variances of the all-down state at N=100") {
  const auto ops = build_spin_operators(100);
  const auto [vx, vy] = transverse_variances(all_down_state(100), ops);
  CHECK(vx == doctest::Approx(25.0).epsilon(1e-10));
  CHECK(vy == doctest::Approx(25.0).epsilon(1e-10));
}
