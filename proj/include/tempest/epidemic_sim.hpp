#pragma once

// Exact stochastic SIS simulation over dynamic graphs, the linear upper-bound
// systems along sampled graph paths, decay-rate estimation and the
// re-infection threshold experiment.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "tempest/stochastic_graph.hpp"
#include "tempest/threshold.hpp"

namespace tempest {

struct SimulationTrace {
  std::vector<double> times;
  std::vector<int> infected_counts;
  std::vector<std::vector<std::uint8_t>> states;  // filled when requested
  std::uint64_t seed = 0;
  int reinfections = 0;
};

struct SimOptions {
  bool record_states = false;
  PathOptions path;
  /// CT only: stop after this many events even before the horizon.
  std::size_t max_events = 100'000'000;
};

std::vector<int> all_nodes(int n);

/// Direct-method Gillespie over edge-chain jumps, recoveries and infections.
/// Records a stamp at t = 0 and at every node event; stops at extinction, at
/// the horizon, or when no node event can ever fire again.
SimulationTrace simulate_ct_exact(const DynamicGraph& graph, const EpidemicParams& params, double horizon,
                                  std::span<const int> init_infected, std::uint64_t seed, SimOptions options = {});

/// Synchronous discrete-time chain, steps 0..steps. Edge chains are sampled
/// lazily, only where an infected node touches a susceptible one.
SimulationTrace simulate_dt_exact(const DynamicGraph& graph, const EpidemicParams& params, int steps,
                                  std::span<const int> init_infected, bool reinfect, std::uint64_t seed,
                                  SimOptions options = {});

/// Same node dynamics on a fixed, pre-sampled discrete graph path.
SimulationTrace simulate_dt_on_path(const DynamicGraph& graph, const GraphPath& path, const EpidemicParams& params,
                                    int steps, std::span<const int> init_infected, bool reinfect,
                                    std::uint64_t seed, SimOptions options = {});

/// p(t) = exp(log_norm) * direction, sampled at `times`.
struct LinearTrajectory {
  std::vector<double> times;
  std::vector<double> log_norm;
  std::vector<Vector> direction;  // unit 2-norm; filled when requested
};

struct LinearOptions {
  /// CT: spacing of the output grid (0 means switch times only). DT: ignored,
  /// every step is recorded.
  double sample_interval = 1.0;
  bool keep_direction = false;
  double tolerance = 1e-10;
};

/// CT: p' = (B A(t) - D) p by adaptive Dormand-Prince, restarted at each
/// switch. DT: p(k+1) = (B A(k) + I - D) p(k).
LinearTrajectory propagate_linear(const DynamicGraph& graph, const GraphPath& path, const EpidemicParams& params,
                                  const Vector& p0, LinearOptions options = {});

struct DecayEstimate {
  double rate;  // mean of -slope
  double standard_error;
  double ci_low;
  double ci_high;
  std::vector<double> rates;
};

/// Least-squares slope of log ||p|| against t after `burn_in`, per trajectory.
/// Needs at least 20 trajectories (InsufficientData).
DecayEstimate decay_rate_estimate(std::span<const LinearTrajectory> trajectories, double burn_in);

struct EmpiricalThresholdReport {
  std::vector<double> beta_grid;
  std::vector<double> y_star;
  std::vector<double> z_star;
  std::optional<double> beta_star;
  int paths = 0;
  int steps = 0;
};

struct EmpiricalOptions {
  std::optional<std::vector<int>> init_infected;  // default: every node
  PathOptions path;
};

/// For each beta: `paths` re-infecting runs, y* = mean infected at the last
/// step, z* = y* - 1, beta* = largest grid beta with z* < 1. Path p uses the
/// same seed at every beta. Parallel over (beta, path) with ordered reduction.
EmpiricalThresholdReport empirical_threshold(const DynamicGraph& graph, double delta,
                                             std::span<const double> beta_grid, int paths, int steps,
                                             std::uint64_t seed, EmpiricalOptions options = {});

/// Seed used for path p of an experiment seeded with `seed`.
std::uint64_t path_seed(std::uint64_t seed, std::size_t p);

namespace reference {
EmpiricalThresholdReport empirical_threshold(const DynamicGraph& graph, double delta,
                                             std::span<const double> beta_grid, int paths, int steps,
                                             std::uint64_t seed, EmpiricalOptions options = {});
}  // namespace reference

}  // namespace tempest
