#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "tempest/errors.hpp"
#include "tempest/spectral.hpp"
#include "tempest/stochastic_graph.hpp"
#include "tempest/threshold.hpp"

using namespace tempest;

namespace {

Matrix random_symmetric(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Matrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) m(i, j) = m(j, i) = g(rng);
  return m;
}

Matrix random_metzler(int n, double density, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u;
  Matrix m = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) m(i, j) = -3.0 * u(rng);
      else if (u(rng) < density) m(i, j) = u(rng);
    }
  return m;
}

}  // namespace

TEST_CASE("kappa at the origin is n") {
  for (int n : {1, 2, 50})
    for (double b : {0.1, 1.0, 7.0}) CHECK(kappa({b, 0.3, n}, 0.0) == doctest::Approx(n).epsilon(1e-15));
}

TEST_CASE("kappa closed-form values") {
  CHECK(kappa({1.0, 1.0, 2}, 1.0) == doctest::Approx(std::exp(1.0) / 2.0).epsilon(1e-14));
  // 50-digit evaluation: 64.869628303369220101885782918628326480595363033651
  CHECK(kappa({1.0, 4.0, 100}, 2.0) == doctest::Approx(64.8696283033692201).epsilon(1e-12));
  CHECK(std::isinf(log_kappa({1.0, 0.0, 3}, 0.5)));
  CHECK(log_kappa({1.0, 0.0, 3}, 0.0) == doctest::Approx(std::log(3.0)));
}

TEST_CASE("kappa is decreasing and matches the direct formula") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.05, 5.0);
  for (int t = 0; t < 200; ++t) {
    const KappaParams p{u(rng), u(rng), 1 + static_cast<int>(rng() % 500)};
    double prev = kappa(p, 0.0);
    for (double s = 0.05; s < 20.0; s *= 1.3) {
      const double k = kappa(p, s);
      CHECK(k < prev);
      CHECK(k == doctest::Approx(oracle::kappa(p.b, p.d, p.n, s)).epsilon(1e-11));
      prev = k;
    }
  }
}

TEST_CASE("kappa domain errors") {
  CHECK_THROWS_AS(kappa({1.0, 1.0, 2}, -0.1), DomainError);
  CHECK_THROWS_AS(kappa({0.0, 1.0, 2}, 0.1), DomainError);
  CHECK_THROWS_AS(kappa_inv_at_one({1.0, 0.0, 2}), DomainError);
}

TEST_CASE("kappa inverse at one") {
  CHECK(kappa_inv_at_one({2.0, 0.7, 1}) == 0.0);

  // 50-digit root of 2 e^s (s+1)^{-(s+1)} = 1: 1.3908675361848094223...
  const double root = kappa_inv_at_one({1.0, 1.0, 2});
  CHECK(root == doctest::Approx(1.3908675361848094).epsilon(1e-12));
  // 10^6-point grid bracketing on [0, 4].
  const int points = 1'000'000;
  const double h = 4.0 / points;
  int sign_change = -1;
  for (int k = 0; k < points; ++k)
    if (oracle::kappa(1, 1, 2, k * h) > 1.0 && oracle::kappa(1, 1, 2, (k + 1) * h) <= 1.0) sign_change = k;
  REQUIRE(sign_change >= 0);
  CHECK(root >= sign_change * h);
  CHECK(root <= (sign_change + 1) * h);

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.01, 10.0);
  for (int t = 0; t < 100; ++t) {
    const KappaParams p{u(rng), u(rng), 2 + static_cast<int>(rng() % 10'000)};
    const double s = kappa_inv_at_one(p);
    CHECK(std::abs(kappa(p, s) - 1.0) < 1e-10);
  }
}

TEST_CASE("c minus") {
  CHECK(c_minus(3.0) == 0.0);
  CHECK(c_minus(-2.0) == 2.0);
  CHECK(c_minus(0.0) == 0.0);
}

TEST_CASE("spectral abscissa of regular and closed-form graphs") {
  for (int n : {2, 5, 40, 150}) {
    const Matrix k = Matrix::Ones(n, n) - Matrix::Identity(n, n);
    CHECK(spectral_abscissa(k) == doctest::Approx(n - 1).epsilon(1e-10));
  }
  for (int n : {10, 50, 200}) {
    const double r = 0.23, q = 0.8, rr = 1.9;
    CHECK(spectral_abscissa(mean_matrix(build_small_world(n, r)).values) ==
          doctest::Approx(1.0 + r * (n - 2)).epsilon(1e-10));
    CHECK(spectral_abscissa(mean_matrix(build_edge_markovian_complete(n, q, rr)).values) ==
          doctest::Approx((n - 1) * q / (q + rr)).epsilon(1e-10));
  }
}

TEST_CASE("symmetric solvers agree with a full decomposition") {
  std::mt19937_64 rng(3);
  for (int n : {5, 64, 65, 120, 300}) {
    const Matrix m = random_symmetric(n, rng);
    const double expected = oracle::mu(m);
    CHECK(symmetric_max_eigenvalue(m) == doctest::Approx(expected).epsilon(1e-10));
    CHECK(lanczos_max_eigenvalue(m) == doctest::Approx(expected).epsilon(1e-10));
  }
}

TEST_CASE("Perron iteration agrees with a full decomposition") {
  std::mt19937_64 rng(4);
  for (int n : {3, 20, 80}) {
    for (double density : {0.05, 0.3, 1.0}) {
      const Matrix m = random_metzler(n, density, rng);
      REQUIRE(is_metzler(m));
      const double expected = oracle::eta(m);
      CHECK(perron_abscissa(DenseOperator(m)).value == doctest::Approx(expected).epsilon(1e-9));
      CHECK(spectral_abscissa(m) == doctest::Approx(expected).epsilon(1e-9));
    }
  }
}

TEST_CASE("general matrices use the dense fallback") {
  Matrix rot(2, 2);
  rot << 0, -1, 1, 0;
  CHECK(spectral_abscissa(rot) == doctest::Approx(0.0));
  CHECK(dense_spectral_abscissa(rot) == doctest::Approx(0.0));
}

TEST_CASE("matrix measure") {
  Vector d(3);
  d << 0.5, 2.0, 0.7;
  CHECK(matrix_measure(Matrix((-d).asDiagonal())) == doctest::Approx(-0.5));
  Matrix swap(2, 2);
  swap << 0, 1, 1, 0;
  CHECK(matrix_measure(swap) == doctest::Approx(1.0));
  Matrix nil(2, 2);
  nil << 0, 2, 0, 0;
  CHECK(matrix_measure(nil) == doctest::Approx(1.0));
}

TEST_CASE("Metzler monotonicity") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u;
  for (int t = 0; t < 500; ++t) {
    const int n = 2 + static_cast<int>(rng() % 30);
    const Matrix a = random_metzler(n, 0.4, rng);
    Matrix b = a;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (u(rng) < 0.3) b(i, j) += u(rng);
    CHECK(spectral_abscissa(a) <= spectral_abscissa(b) + 1e-10);
  }
}

TEST_CASE("maximisation of simple objectives") {
  const auto down = maximize_on_interval([](double s) { return -s; }, 0.0, 1.0);
  CHECK(down.s_star > 0.0);
  CHECK(down.s_star < 1e-6);
  CHECK(down.value < 0.0);
  CHECK(down.value > -1e-6);

  const auto quad = maximize_on_interval([](double s) { return -(s - 0.5) * (s - 0.5); }, 0.0, 1.0);
  CHECK(std::abs(quad.s_star - 0.5) < 1e-6);

  CHECK_THROWS_AS(
      maximize_on_interval([](double s) { return 1.0 / s; }, 0.0, 1.0, {.divergence_cap = 1e6}), DivergenceDetected);
}

TEST_CASE("maximisation of a certificate objective against a fine grid") {
  // Random 10-node AMEI mean matrix with a nonnegative support bound.
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  const int n = 10;
  Matrix a = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (u(rng) < 0.6) a(i, j) = a(j, i) = u(rng);
  const double beta = 0.3, delta = 1.0;
  const Vector b = Vector::Constant(n, beta);
  const double d2 = oracle::delta2(a, b);
  const double k0 = oracle::kappa_inv(beta, d2, n);
  const double c2 = oracle::eta(beta * oracle::sgn(a) - delta * Matrix::Identity(n, n)) - k0;
  REQUIRE(c2 + k0 >= 0.0);
  const double sbar = delta + c_minus(c2);
  auto f = [&](double s) {
    const double k = oracle::kappa(beta, d2, n, s);
    return -(s + c2 * k) / (1.0 - k);
  };
  const auto grid = oracle::grid_max(f, k0, sbar, 10'000'000);
  const auto m = maximize_on_interval(f, k0, sbar);
  CHECK(std::abs(m.value - grid.value) < 1e-8);
}
