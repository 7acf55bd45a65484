#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "tempest/epidemic_sim.hpp"
#include "tempest/errors.hpp"
#include "tempest/oracle.hpp"
#include "tempest/rng.hpp"
#include "tempest/threshold.hpp"

using namespace tempest;

namespace {

DynamicGraph static_complete(int n, TimeKind time) {
  DynamicGraph g(n, GraphKind::Amei, time);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) g.add_edge(i, j, EdgeProcess::static_on(time));
  return g;
}

DynamicGraph empty_graph(int n, TimeKind time) {
  DynamicGraph g(n, GraphKind::Amei, time);
  g.add_edge(0, 1, EdgeProcess::static_off(time));
  return g;
}

// Complete discrete-time AMEI graph with random two-state edges.
DynamicGraph random_dt_graph(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.1, 0.9);
  DynamicGraph g(n, GraphKind::Amei, TimeKind::Discrete);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) g.add_edge(i, j, build_edge_markovian(u(rng), u(rng), TimeKind::Discrete));
  return g;
}

bool non_increasing(const std::vector<int>& v) { return std::is_sorted(v.rbegin(), v.rend()); }

}  // namespace

TEST_CASE("continuous time: no infection means monotone die-out") {
  const auto g = build_edge_markovian_complete(8, 1.0, 1.0);
  const auto params = EpidemicParams::homogeneous(8, 0.0, 1.0);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto tr = simulate_ct_exact(g, params, 100.0, all_nodes(8), seed);
    CHECK(non_increasing(tr.infected_counts));
    CHECK(tr.infected_counts.front() == 8);
    CHECK(tr.infected_counts.back() == 0);
  }
}

TEST_CASE("continuous time: no recovery on a complete static graph saturates") {
  const auto g = static_complete(6, TimeKind::Continuous);
  EpidemicParams params = EpidemicParams::homogeneous(6, 0.5, 0.0);
  const std::vector<int> init{2};
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto tr = simulate_ct_exact(g, params, 1e3, init, seed);
    CHECK(std::is_sorted(tr.infected_counts.begin(), tr.infected_counts.end()));
    CHECK(tr.infected_counts.back() == 6);
  }
}

TEST_CASE("continuous time: certified instance dies out") {
  const auto g = random_markov_graph(6, 6, GraphKind::Amei, 11);
  const auto params = EpidemicParams::homogeneous(6, 0.2, 1.0);
  const auto report = certify_amei_ct(mean_matrix(g), params);
  REQUIRE(report.stable);
  int extinct = 0;
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    const auto tr = simulate_ct_exact(g, params, 200.0, all_nodes(6), seed);
    extinct += tr.infected_counts.back() == 0;
  }
  CHECK(extinct >= 495);
}

TEST_CASE("simulation parameter checks") {
  const auto g = static_complete(3, TimeKind::Discrete);
  const auto params = EpidemicParams::homogeneous(3, 0.1, 0.1);
  const std::vector<int> none;
  const std::vector<int> bad{5};
  CHECK_THROWS_AS(simulate_dt_exact(g, params, 10, none, false, 0), ParamRange);
  CHECK_THROWS_AS(simulate_dt_exact(g, params, 10, bad, false, 0), ParamRange);
  CHECK_THROWS_AS(simulate_dt_exact(g, EpidemicParams::homogeneous(3, 1.5, 0.1), 10, all_nodes(3), false, 0),
                  ParamRange);
  CHECK_THROWS_AS(simulate_dt_exact(g, EpidemicParams::homogeneous(2, 0.1, 0.1), 10, all_nodes(3), false, 0),
                  ParamRange);
  const auto path = sample_graph_path(g, 5.0, 1);
  CHECK_THROWS_AS(simulate_dt_on_path(g, path, params, 6, all_nodes(3), false, 0), ParamRange);
}

TEST_CASE("discrete time: deterministic corner cases") {
  const auto g = random_dt_graph(5, 1);
  SUBCASE("full recovery without reinfection") {
    const auto tr = simulate_dt_exact(g, EpidemicParams::homogeneous(5, 0.0, 1.0), 10, all_nodes(5), false, 3);
    REQUIRE(tr.infected_counts.size() == 11);
    CHECK(tr.infected_counts[0] == 5);
    for (std::size_t k = 1; k < tr.infected_counts.size(); ++k) CHECK(tr.infected_counts[k] == 0);
    CHECK(tr.times.back() == 10.0);
  }
  SUBCASE("reinfection keeps one node alive") {
    const auto tr = simulate_dt_exact(g, EpidemicParams::homogeneous(5, 0.0, 1.0), 10, all_nodes(5), true, 3);
    for (std::size_t k = 1; k < tr.infected_counts.size(); ++k) CHECK(tr.infected_counts[k] == 1);
    CHECK(tr.reinfections == 10);
  }
  SUBCASE("no recovery keeps everyone infected") {
    const auto tr = simulate_dt_exact(g, EpidemicParams::homogeneous(5, 0.3, 0.0), 10, all_nodes(5), false, 3);
    for (int c : tr.infected_counts) CHECK(c == 5);
  }
}

TEST_CASE("discrete time: simulated states follow the recorded counts") {
  const auto g = random_dt_graph(6, 2);
  SimOptions opt;
  opt.record_states = true;
  const auto tr = simulate_dt_exact(g, EpidemicParams::homogeneous(6, 0.4, 0.3), 30, all_nodes(6), true, 9, opt);
  REQUIRE(tr.states.size() == tr.infected_counts.size());
  for (std::size_t k = 0; k < tr.states.size(); ++k)
    CHECK(std::count(tr.states[k].begin(), tr.states[k].end(), std::uint8_t{1}) == tr.infected_counts[k]);
}

TEST_CASE("discrete time: below and above the experiment threshold") {
  const auto eg = build_experiment_graph_iv(500, 0.2, 1);
  auto mean_final = [&](double beta) {
    const auto params = EpidemicParams::homogeneous(500, beta, 0.05);
    double sum = 0.0;
    for (std::size_t p = 0; p < 20; ++p)
      sum += simulate_dt_exact(eg.graph, params, 1000, all_nodes(500), true, path_seed(5, p)).infected_counts.back();
    return sum / 20.0 - 1.0;
  };
  const double low = mean_final(6e-4);
  const double high = mean_final(9e-4);
  CHECK(low < 1.0);
  CHECK(high > 1.0);
  CHECK(high > low);
}

TEST_CASE("linear system without edges decays at the recovery rate") {
  const int n = 4;
  Vector p0(n);
  p0 << 1.0, 0.5, 0.25, 2.0;
  SUBCASE("continuous") {
    const auto g = empty_graph(n, TimeKind::Continuous);
    const auto path = sample_graph_path(g, 10.0, 0);
    const auto tr = propagate_linear(g, path, EpidemicParams::homogeneous(n, 0.7, 0.8), p0);
    REQUIRE(tr.times.size() == 11);
    for (std::size_t k = 0; k < tr.times.size(); ++k)
      CHECK(tr.log_norm[k] == doctest::Approx(std::log(p0.norm()) - 0.8 * tr.times[k]).epsilon(1e-8));
  }
  SUBCASE("discrete") {
    const auto g = empty_graph(n, TimeKind::Discrete);
    const auto path = sample_graph_path(g, 25.0, 0);
    const auto tr = propagate_linear(g, path, EpidemicParams::homogeneous(n, 0.7, 0.1), p0);
    REQUIRE(tr.times.size() == 26);
    for (std::size_t k = 0; k < tr.times.size(); ++k)
      CHECK(tr.log_norm[k] == doctest::Approx(std::log(p0.norm()) + k * std::log(0.9)).epsilon(1e-12));
  }
}

TEST_CASE("linear system across one switch matches matrix exponentials") {
  const int n = 3;
  DynamicGraph g(n, GraphKind::Amei, TimeKind::Continuous);
  g.add_edge(0, 1, build_edge_markovian(1.0, 1.0));
  g.add_edge(1, 2, EdgeProcess::static_on(TimeKind::Continuous));
  GraphPath path;
  path.time = TimeKind::Continuous;
  path.horizon = 2.0;
  path.initial = {0, 1};
  path.events = {{1.0, 0, 1}};

  EpidemicParams params;
  params.beta = Vector(n);
  params.beta << 0.9, 1.3, 0.4;
  params.delta = Vector(n);
  params.delta << 0.5, 0.2, 1.1;
  Vector p0(n);
  p0 << 1.0, 0.0, 0.3;

  LinearOptions opt;
  opt.keep_direction = true;
  const auto tr = propagate_linear(g, path, params, p0, opt);
  REQUIRE(tr.times.size() == 3);

  Matrix a0 = Matrix::Zero(n, n), a1 = Matrix::Zero(n, n);
  a0(1, 2) = a0(2, 1) = 1.0;
  a1 = a0;
  a1(0, 1) = a1(1, 0) = 1.0;
  const Matrix m0 = params.beta.asDiagonal() * a0 - Matrix(params.delta.asDiagonal());
  const Matrix m1 = params.beta.asDiagonal() * a1 - Matrix(params.delta.asDiagonal());
  const Vector p1 = m0.exp() * p0;
  const Vector p2 = m1.exp() * p1;
  const Vector got1 = std::exp(tr.log_norm[1]) * tr.direction[1];
  const Vector got2 = std::exp(tr.log_norm[2]) * tr.direction[2];
  CHECK((got1 - p1).norm() / p1.norm() < 1e-8);
  CHECK((got2 - p2).norm() / p2.norm() < 1e-8);
}

TEST_CASE("discrete linear system dominates the infection probabilities") {
  const int n = 5;
  const auto g = random_dt_graph(n, 4);
  const auto params = EpidemicParams::homogeneous(n, 0.15, 0.3);
  const int steps = 50;
  const auto path = sample_graph_path(g, steps, 77);
  const std::vector<int> init{0, 3};
  Vector p0 = Vector::Zero(n);
  for (int i : init) p0[i] = 1.0;
  LinearOptions opt;
  opt.keep_direction = true;
  const auto lin = propagate_linear(g, path, params, p0, opt);

  const int runs = 20'000;
  SimOptions sopt;
  sopt.record_states = true;
  std::vector<Matrix> sum(2, Matrix::Zero(n, steps + 1));  // first and second moments
  for (int r = 0; r < runs; ++r) {
    const auto tr = simulate_dt_on_path(g, path, params, steps, init, false, derive_seed(3, {std::uint64_t(r)}), sopt);
    for (int k = 0; k <= steps; ++k)
      for (int i = 0; i < n; ++i) {
        const double x = tr.states[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)];
        sum[0](i, k) += x;
        sum[1](i, k) += x * x;
      }
  }
  int violations = 0;
  for (int k = 0; k <= steps; ++k) {
    const Vector p = std::exp(lin.log_norm[static_cast<std::size_t>(k)]) * lin.direction[static_cast<std::size_t>(k)];
    for (int i = 0; i < n; ++i) {
      const double m = sum[0](i, k) / runs;
      const double se = std::sqrt(std::max(0.0, sum[1](i, k) / runs - m * m) / runs);
      if (m > p[i] + 3.0 * se + 1e-12) ++violations;
    }
  }
  CHECK(violations == 0);
}

TEST_CASE("decay estimates") {
  const int n = 4;
  const Vector p0 = Vector::Ones(n);
  SUBCASE("continuous, no edges") {
    const auto g = empty_graph(n, TimeKind::Continuous);
    std::vector<LinearTrajectory> trs;
    for (std::uint64_t s = 0; s < 20; ++s)
      trs.push_back(propagate_linear(g, sample_graph_path(g, 20.0, s), EpidemicParams::homogeneous(n, 0.5, 0.6), p0));
    const auto est = decay_rate_estimate(trs, 1.0);
    CHECK(est.rate == doctest::Approx(0.6).epsilon(1e-8));
    CHECK(est.standard_error < 1e-8);
  }
  SUBCASE("discrete contraction") {
    const auto g = empty_graph(n, TimeKind::Discrete);
    std::vector<LinearTrajectory> trs;
    for (std::uint64_t s = 0; s < 25; ++s)
      trs.push_back(propagate_linear(g, sample_graph_path(g, 30.0, s), EpidemicParams::homogeneous(n, 0.5, 0.1), p0));
    CHECK(decay_rate_estimate(trs, 0.0).rate == doctest::Approx(-std::log(0.9)).epsilon(1e-12));
  }
  SUBCASE("too few trajectories") {
    const auto g = empty_graph(n, TimeKind::Continuous);
    std::vector<LinearTrajectory> trs;
    for (std::uint64_t s = 0; s < 19; ++s)
      trs.push_back(propagate_linear(g, sample_graph_path(g, 5.0, s), EpidemicParams::homogeneous(n, 0.5, 0.6), p0));
    CHECK_THROWS_AS(decay_rate_estimate(trs, 0.0), InsufficientData);
  }
  SUBCASE("certified instance decays at least as fast as its bound") {
    const auto g = random_markov_graph(5, 6, GraphKind::Amei, 21);
    const auto params = EpidemicParams::homogeneous(5, 0.25, 1.0);
    const auto report = certify_amei_ct(mean_matrix(g), params);
    REQUIRE(report.stable);
    REQUIRE(report.decay_rate_bound.has_value());
    std::vector<LinearTrajectory> trs;
    for (std::uint64_t s = 0; s < 40; ++s)
      trs.push_back(propagate_linear(g, sample_graph_path(g, 60.0, s), params, Vector::Ones(5)));
    const auto est = decay_rate_estimate(trs, 5.0);
    CHECK(est.rate >= *report.decay_rate_bound - 3.0 * est.standard_error);
  }
}

TEST_CASE("empirical threshold") {
  const auto eg = build_experiment_graph_iv(100, 0.2, 3);
  const std::vector<double> grid{1e-4, 2e-4, 3e-4};
  const auto report = empirical_threshold(eg.graph, 0.05, grid, 12, 300, 8);
  REQUIRE(report.z_star.size() == 3);
  for (double z : report.z_star) CHECK(z < 0.1);
  REQUIRE(report.beta_star.has_value());
  CHECK(*report.beta_star == 3e-4);

  SUBCASE("parallel and serial agree exactly") {
    const auto ref = reference::empirical_threshold(eg.graph, 0.05, grid, 12, 300, 8);
    CHECK(ref.y_star == report.y_star);
    CHECK(ref.z_star == report.z_star);
  }
  SUBCASE("same seed, same trace") {
    const auto params = EpidemicParams::homogeneous(100, 0.01, 0.05);
    const auto a = simulate_dt_exact(eg.graph, params, 200, all_nodes(100), true, 17);
    const auto b = simulate_dt_exact(eg.graph, params, 200, all_nodes(100), true, 17);
    CHECK(a.infected_counts == b.infected_counts);
    CHECK(a.reinfections == b.reinfections);
  }
  SUBCASE("bad arguments") {
    const std::vector<double> none;
    CHECK_THROWS_AS(empirical_threshold(eg.graph, 0.05, none, 12, 300, 8), ParamRange);
    CHECK_THROWS_AS(empirical_threshold(eg.graph, 0.05, grid, 0, 300, 8), ParamRange);
  }
}
