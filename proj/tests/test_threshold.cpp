#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "tempest/errors.hpp"
#include "tempest/oracle.hpp"
#include "tempest/stochastic_graph.hpp"
#include "tempest/threshold.hpp"

using namespace tempest;

namespace {

constexpr long kGrid = 10'000'000;

DynamicGraph random_graph(int n, GraphKind kind, TimeKind time, double density, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u;
  DynamicGraph g(n, kind, time);
  for (int i = 0; i < n; ++i)
    for (int j = kind == GraphKind::Amei ? i + 1 : 0; j < n; ++j) {
      if (i == j || u(rng) >= density) continue;
      const double q = 0.05 + 0.9 * u(rng), r = 0.05 + 0.9 * u(rng);
      g.add_edge(i, j, build_edge_markovian(q, r, time));
    }
  return g;
}

Matrix diag(const Vector& v) { return v.asDiagonal(); }

struct Expected {
  double lambda, k0, support, c, sbar, tau, s_star;
};

// T1 evaluated from the definitions.
Expected t1_oracle(const Matrix& a, const EpidemicParams& p) {
  const int n = static_cast<int>(a.rows());
  const double b = p.b_bar();
  const double d1 = oracle::delta1(a, p.beta);
  Expected e{};
  e.lambda = oracle::mu(diag(p.beta) * a - diag(p.delta));
  e.k0 = oracle::kappa_inv(b, d1, n);
  e.support = oracle::mu(diag(p.beta) * oracle::sgn(a) - diag(p.delta));
  e.c = e.support - e.k0 / 2.0;
  e.sbar = 2.0 * p.delta_min() + 2.0 * std::max(-e.c, 0.0);
  const auto m = oracle::grid_max(
      [&](double s) {
        const double k = oracle::kappa(b, d1, n, s);
        return -(s + 2.0 * e.c * k) / (2.0 * (1.0 - k));
      },
      e.k0, e.sbar, kGrid);
  e.tau = m.value;
  e.s_star = m.s;
  return e;
}

// T2 evaluated from the definitions.
Expected t2_oracle(const Matrix& a, const EpidemicParams& p) {
  const int n = static_cast<int>(a.rows());
  const double b = p.b_bar();
  const double d2 = oracle::delta2(a, p.beta);
  Expected e{};
  e.lambda = oracle::eta(diag(p.beta) * a - diag(p.delta));
  e.k0 = oracle::kappa_inv(b, d2, n);
  e.support = oracle::eta(diag(p.beta) * oracle::sgn(a) - diag(p.delta));
  e.c = e.support - e.k0;
  e.sbar = p.delta_min() + std::max(-e.c, 0.0);
  const auto m = oracle::grid_max(
      [&](double s) {
        const double k = oracle::kappa(b, d2, n, s);
        return -(s + e.c * k) / (1.0 - k);
      },
      e.k0, e.sbar, kGrid);
  e.tau = m.value;
  e.s_star = m.s;
  return e;
}

}  // namespace

TEST_CASE("static conditions") {
  const Matrix zero = Matrix::Zero(3, 3);
  CHECK(static_ct_condition(zero, EpidemicParams::homogeneous(3, 5.0, 0.1)).stable);

  // eta(K3) = 2, so the homogeneous threshold in beta/delta is 1/2.
  const Matrix k3 = Matrix::Ones(3, 3) - Matrix::Identity(3, 3);
  const StaticVerdict below = static_ct_condition(k3, EpidemicParams::homogeneous(3, 0.4, 1.0));
  CHECK(below.stable);
  CHECK(below.threshold == doctest::Approx(0.5));
  CHECK(below.margin == doctest::Approx(0.1));
  CHECK_FALSE(static_ct_condition(k3, EpidemicParams::homogeneous(3, 0.6, 1.0)).stable);

  EpidemicParams het{Vector::Constant(3, 0.4), Vector::Constant(3, 1.0)};
  het.beta[0] = 0.45;
  CHECK(static_ct_condition(k3, het).lhs ==
        doctest::Approx(oracle::eta(diag(het.beta) * k3 - diag(het.delta))).epsilon(1e-12));

  CHECK(static_dt_condition(k3, EpidemicParams::homogeneous(3, 0.1, 0.3)).lhs == doctest::Approx(0.9));
  CHECK_FALSE(static_dt_condition(k3, EpidemicParams::homogeneous(3, 0.2, 0.3)).stable);
}

TEST_CASE("parameter validation") {
  const Matrix k3 = Matrix::Ones(3, 3) - Matrix::Identity(3, 3);
  CHECK_THROWS_AS(static_ct_condition(k3, EpidemicParams::homogeneous(2, 0.4, 1.0)), ParamRange);
  CHECK_THROWS_AS(static_ct_condition(k3, EpidemicParams::homogeneous(3, -0.4, 1.0)), ParamRange);
  CHECK_THROWS_AS(static_dt_condition(k3, EpidemicParams::homogeneous(3, 0.1, 1.5)), ParamRange);
}

TEST_CASE("certificate names") {
  CHECK(to_string(Certificate::SupportTrivial) == "SUPPORT_TRIVIAL");
  CHECK(certificate_from_string("t4") == Certificate::T4);
  CHECK(certificate_from_string("STATIC_DT") == Certificate::StaticDt);
  CHECK_THROWS_AS(certificate_from_string("t9"), ConfigError);
}

TEST_CASE("AMAI certificate on a deterministic graph reduces to the static check") {
  DynamicGraph g(4, GraphKind::Amai, TimeKind::Continuous);
  g.add_edge(0, 1, EdgeProcess::static_on(TimeKind::Continuous));
  g.add_edge(1, 2, EdgeProcess::static_on(TimeKind::Continuous));
  g.add_edge(2, 0, EdgeProcess::static_on(TimeKind::Continuous));
  g.add_edge(3, 0, EdgeProcess::static_on(TimeKind::Continuous));
  const Matrix a = mean_matrix(g).values;
  for (double beta : {0.5, 0.9, 1.1, 2.0}) {
    const auto params = EpidemicParams::homogeneous(4, beta, 1.0);
    const ThresholdReport r = certify_amai_ct(g, params);
    CHECK(r.at("Delta1") == 0.0);
    CHECK(r.certificate == Certificate::StaticCt);
    CHECK(r.stable == (oracle::eta(beta * a - Matrix::Identity(4, 4)) < 0.0));
  }
}

TEST_CASE("certificates on an empty graph") {
  const Vector delta = (Vector(3) << 0.4, 0.9, 1.3).finished();
  const EpidemicParams p{Vector::Constant(3, 0.7), delta};
  const ThresholdReport t1 = certify_amai_ct(DynamicGraph(3, GraphKind::Amai, TimeKind::Continuous), p);
  CHECK(t1.stable);
  CHECK(*t1.decay_rate_bound == doctest::Approx(0.4));
  const ThresholdReport t2 = certify_amei_ct(DynamicGraph(3, GraphKind::Amei, TimeKind::Continuous), p);
  CHECK(t2.stable);
  CHECK(*t2.decay_rate_bound == doctest::Approx(0.4));
}

TEST_CASE("T1 certificate on a random AMAI instance against the definitions") {
  const DynamicGraph g = random_graph(10, GraphKind::Amai, TimeKind::Continuous, 0.5, 21);
  const Matrix a = mean_matrix(g).values;
  const EpidemicParams p = EpidemicParams::homogeneous(10, 0.25, 1.0);
  const ThresholdReport r = certify_amai_ct(g, p);
  const Expected e = t1_oracle(a, p);
  REQUIRE(e.support >= 0.0);
  REQUIRE(r.certificate == Certificate::T1);
  CHECK(r.at("Delta1") == doctest::Approx(oracle::delta1(a, p.beta)).epsilon(1e-12));
  CHECK(std::abs(r.at("lambda1") - e.lambda) < 1e-10);
  CHECK(std::abs(r.at("kappa_inv_1") - e.k0) < 1e-10);
  CHECK(std::abs(r.at("mu_support") - e.support) < 1e-10);
  CHECK(std::abs(r.at("c1") - e.c) < 1e-10);
  CHECK(std::abs(r.at("sbar1") - e.sbar) < 1e-10);
  CHECK(std::abs(r.threshold - e.tau) < 1e-8);
  CHECK(r.stable == (e.lambda < e.tau));
}

TEST_CASE("T2 certificate on random AMEI instances against the definitions") {
  for (std::uint64_t seed : {31, 32, 33}) {
    const DynamicGraph g = random_graph(10, GraphKind::Amei, TimeKind::Continuous, 0.6, seed);
    const Matrix a = mean_matrix(g).values;
    const EpidemicParams p = EpidemicParams::homogeneous(10, 0.2, 1.0);
    const ThresholdReport r = certify_amei_ct(g, p);
    const Expected e = t2_oracle(a, p);
    REQUIRE(e.support >= 0.0);
    REQUIRE(r.certificate == Certificate::T2);
    CHECK(std::abs(r.at("lambda2") - e.lambda) < 1e-10);
    CHECK(std::abs(r.at("kappa_inv_2") - e.k0) < 1e-10);
    CHECK(std::abs(r.at("eta_support") - e.support) < 1e-10);
    CHECK(std::abs(r.at("c2") - e.c) < 1e-10);
    CHECK(std::abs(r.at("sbar2") - e.sbar) < 1e-10);
    CHECK(std::abs(r.threshold - e.tau) < 1e-8);
    CHECK(r.stable == (e.lambda < e.tau));
  }
}

TEST_CASE("T2 certificate on the complete edge-Markovian graph") {
  const int n = 10;
  const DynamicGraph g = build_edge_markovian_complete(n, 1.0, 1.0);
  const EpidemicParams p = EpidemicParams::homogeneous(n, 0.01, 1.0);
  const ThresholdReport r = certify_amei_ct(g, p);
  const Matrix a = mean_matrix(g).values;
  const double support = oracle::eta(0.01 * oracle::sgn(a) - Matrix::Identity(n, n));
  // 9 * 0.01 - 1 < 0: the support bound alone settles it.
  REQUIRE(support < 0.0);
  CHECK(r.certificate == Certificate::SupportTrivial);
  CHECK(r.stable);
  CHECK(r.threshold == std::numeric_limits<double>::infinity());
  CHECK(*r.decay_rate_bound == doctest::Approx(-support).epsilon(1e-12));
  CHECK(r.at("lambda2") == doctest::Approx(oracle::eta(0.01 * a - Matrix::Identity(n, n))).epsilon(1e-12));
  CHECK(r.at("Delta2") == doctest::Approx(9 * 1e-4 * 0.25).epsilon(1e-12));
}

TEST_CASE("T2 certificate reduces to the static check on deterministic graphs") {
  const DynamicGraph g = build_small_world(6, 1.0);
  for (double beta : {0.1, 0.19, 0.21, 0.3}) {
    const ThresholdReport r = certify_amai_ct(g, EpidemicParams::homogeneous(6, beta, 1.0));
    CHECK(r.certificate == Certificate::StaticCt);
    CHECK(r.stable == (beta * 5 < 1.0));
  }
  DynamicGraph k4(4, GraphKind::Amei, TimeKind::Continuous);
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) k4.add_edge(i, j, EdgeProcess::static_on(TimeKind::Continuous));
  CHECK(certify_amei_ct(k4, EpidemicParams::homogeneous(4, 0.3, 1.0)).stable);
  CHECK_FALSE(certify_amei_ct(k4, EpidemicParams::homogeneous(4, 0.34, 1.0)).stable);
}

TEST_CASE("T3 certificate reduces to the classic condition without randomness") {
  DynamicGraph k4(4, GraphKind::Amei, TimeKind::Continuous);
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) k4.add_edge(i, j, EdgeProcess::static_on(TimeKind::Continuous));
  const ThresholdReport r = certify_homogeneous(k4, 0.3, 1.0);
  CHECK(r.at("Delta3") == 0.0);
  CHECK(r.threshold == doctest::Approx(1.0 / 3.0));
  CHECK(r.stable);
  CHECK(*r.decay_rate_bound == doctest::Approx(0.1));
  CHECK_FALSE(certify_homogeneous(k4, 0.34, 1.0).stable);
}

TEST_CASE("xi_H decreases in Delta3 and grows with the network") {
  for (double rho : {0.2, 0.5, 0.7, 0.9}) {
    double prev = std::numeric_limits<double>::infinity();
    for (double omega = 0.05; omega <= 1.0; omega += 0.05) {
      const double xi = xi_h(100, 10.0, omega * 10.0 / 4.0, rho * 10.0).xi;
      // -inf marks an empty maximisation interval.
      if (std::isfinite(xi)) CHECK(xi < prev);
      else CHECK(xi <= prev);
      prev = xi;
    }
  }
  for (double rho : {0.2, 0.5, 0.9})
    for (double omega : {0.1, 0.5, 1.0}) {
      const double small = xi_h(100, 10.0, omega * 10.0 / 4.0, rho * 10.0).xi;
      const double large = xi_h(10000, 1000.0, omega * 1000.0 / 4.0, rho * 1000.0).xi;
      CHECK(large > small);
    }
}

TEST_CASE("xi_H trivial regime") {
  const XiResult x = xi_h(50, 4.0, 1.0, 5.0);
  CHECK(x.trivial);
  CHECK(std::isinf(x.xi));
}

TEST_CASE("T3 certificate stability implies the exact condition") {
  const DynamicGraph g = random_markov_graph(5, 6, GraphKind::Amei, 77);
  for (double beta : {0.05, 0.1, 0.2, 0.3, 0.4, 0.6}) {
    const EpidemicParams p = EpidemicParams::homogeneous(5, beta, 1.0);
    const bool exact = exponential_condition(g, p).stable;
    if (certify_homogeneous(g, beta, 1.0).stable) CHECK(exact);
    if (certify_amei_ct(g, p).stable) CHECK(exact);
  }
}

TEST_CASE("T4 certificate on a deterministic graph is the static DT condition") {
  DynamicGraph g(4, GraphKind::Amei, TimeKind::Discrete);
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) g.add_edge(i, j, EdgeProcess::static_on(TimeKind::Discrete));
  for (double beta : {0.05, 0.09, 0.11, 0.3}) {
    const ThresholdReport r = certify_amei_dt(g, EpidemicParams::homogeneous(4, beta, 0.3));
    CHECK(r.certificate == Certificate::StaticDt);
    CHECK(r.stable == (1.0 - 0.3 + 3 * beta < 1.0));
  }
}

TEST_CASE("T4 certificate on an 8-node instance against the definitions") {
  const int n = 8;
  const DynamicGraph g = random_graph(n, GraphKind::Amei, TimeKind::Discrete, 0.7, 41);
  const Matrix a = mean_matrix(g).values;
  const EpidemicParams p = EpidemicParams::homogeneous(n, 0.04, 0.5);
  const ThresholdReport r = certify_amei_dt(g, p);
  REQUIRE(r.certificate == Certificate::T4);

  const Matrix shift = Matrix::Identity(n, n) - diag(p.delta);
  const double lambda4 = oracle::eta(diag(p.beta) * a + shift);
  const double eta_max = oracle::eta(diag(p.beta) * oracle::sgn(a) + shift);
  const double d2 = oracle::delta2(a, p.beta);
  auto k = [&](double s) { return oracle::kappa(p.b_bar(), d2, n, s); };
  auto f = [&](double s) { return std::pow(lambda4 / eta_max, k(s)) - s; };
  const auto coarse = oracle::grid_max(f, 0.0, 1.0 - lambda4, kGrid, true);
  // Second pass around the best grid point pins s* for the decay bound.
  const double h = (1.0 - lambda4) / kGrid;
  const auto fine = oracle::grid_max(f, std::max(0.0, coarse.s - h), std::min(1.0 - lambda4, coarse.s + h),
                                     1'000'000, true);
  const double gamma = -std::log(lambda4 + fine.s) + k(fine.s) * std::log(lambda4 / eta_max);

  CHECK(std::abs(r.at("lambda4") - lambda4) < 1e-8);
  CHECK(std::abs(r.at("eta_Mmax") - eta_max) < 1e-8);
  CHECK(std::abs(r.at("tau_D") - fine.value) < 1e-8);
  REQUIRE(r.stable);
  CHECK(std::abs(r.at("gamma_D") - gamma) < 1e-8);
}

TEST_CASE("T4 certificate with lambda4 at least one") {
  const DynamicGraph g = random_graph(6, GraphKind::Amei, TimeKind::Discrete, 0.9, 42);
  const ThresholdReport r = certify_amei_dt(g, EpidemicParams::homogeneous(6, 0.9, 0.05));
  CHECK_FALSE(r.stable);
  CHECK(r.threshold == -std::numeric_limits<double>::infinity());
}

TEST_CASE("graph checks of the certificates") {
  const DynamicGraph amai = random_graph(4, GraphKind::Amai, TimeKind::Continuous, 0.8, 1);
  const DynamicGraph dt = random_graph(4, GraphKind::Amei, TimeKind::Discrete, 0.8, 1);
  const EpidemicParams p = EpidemicParams::homogeneous(4, 0.1, 0.5);
  CHECK_THROWS_AS(certify_amei_ct(amai, p), WrongKind);
  CHECK_THROWS_AS(certify_amei_ct(dt, p), WrongKind);
  CHECK_THROWS_AS(certify_amai_ct(dt, p), WrongKind);

  DynamicGraph periodic(3, GraphKind::Amei, TimeKind::Discrete);
  periodic.add_edge(0, 1, build_edge_markovian(1.0, 1.0, TimeKind::Discrete));
  CHECK_THROWS_AS(certify_amei_dt(periodic, p), NonIrreducible);

  Matrix q(3, 3);
  q << -1, 1, 0, 1, -1, 0, 0, 0, 0;
  DynamicGraph reducible(3, GraphKind::Amei, TimeKind::Continuous);
  reducible.add_edge(0, 1, EdgeProcess(MarkovChain::continuous(q), {0, 1, 1}));
  CHECK_THROWS_AS(certify_amei_ct(reducible, p), NonIrreducible);
  CHECK_THROWS_AS(certify(mean_matrix(dt), p, Certificate::SupportTrivial), ConfigError);
}

TEST_CASE("threshold search") {
  const DynamicGraph empty(5, GraphKind::Amei, TimeKind::Discrete);
  CHECK(threshold_in_beta(empty, 0.1, Certificate::T4, 1e-4, 0.5) == 0.5);

  DynamicGraph k4(4, GraphKind::Amei, TimeKind::Continuous);
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) k4.add_edge(i, j, EdgeProcess::static_on(TimeKind::Continuous));
  CHECK(threshold_in_beta(k4, 1.0, Certificate::StaticCt, 1e-3, 5.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
  CHECK_THROWS_AS(threshold_in_beta(k4, 1.0, Certificate::StaticCt, 1.0, 5.0), BracketError);
}

TEST_CASE("thresholds of the 500-node experiment graph") {
  const ExperimentGraph eg = build_experiment_graph_iv(500, 0.2, 1);
  const MeanMatrix mean = mean_matrix(eg.graph);
  const double stat = threshold_in_beta(mean, 0.05, Certificate::StaticDt, 1e-6, 1.0);
  CHECK(stat == doctest::Approx(0.05 / oracle::eta(mean.values)).epsilon(1e-6));
  CHECK(std::abs(stat / 9.95e-4 - 1.0) < 0.10);
  const double t4 = threshold_in_beta(eg.graph, 0.05, Certificate::T4, 1e-6, 1.0);
  CHECK(std::abs(t4 / 6.32e-4 - 1.0) < 0.15);
  CHECK(t4 < stat);
}

TEST_CASE("report serialisation") {
  const ThresholdReport r = certify_amei_ct(build_edge_markovian_complete(6, 1.0, 1.0),
                                            EpidemicParams::homogeneous(6, 0.01, 1.0));
  const auto j = to_json(r);
  CHECK(j.at("certificate") == "SUPPORT_TRIVIAL");
  CHECK(j.at("theorem") == "T2");
  CHECK(j.at("threshold") == "inf");
  CHECK(j.at("intermediates").contains("Delta2"));
}
