#include "tempest/epidemic_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/numeric/odeint.hpp>

#include "tempest/errors.hpp"
#include "tempest/rng.hpp"

namespace tempest {

namespace {

std::size_t draw_categorical(const Vector& w, double u) {
  const double total = w.sum();
  double acc = 0.0;
  const double target = u * total;
  for (Eigen::Index k = 0; k < w.size(); ++k) {
    acc += w[k];
    if (target < acc && w[k] > 0.0) return static_cast<std::size_t>(k);
  }
  // Round-off: fall back to the last state with positive weight.
  for (Eigen::Index k = w.size() - 1; k >= 0; --k)
    if (w[k] > 0.0) return static_cast<std::size_t>(k);
  return 0;
}

void check_sim_params(const EpidemicParams& p, int n, bool discrete) {
  if (p.beta.size() != n || p.delta.size() != n) throw ParamRange("rate vectors must have length " + std::to_string(n));
  if ((p.beta.array() < 0.0).any() || (p.delta.array() < 0.0).any()) throw ParamRange("rates must be >= 0");
  if (!p.beta.allFinite() || !p.delta.allFinite()) throw ParamRange("rates must be finite");
  if (discrete && ((p.beta.array() > 1.0).any() || (p.delta.array() > 1.0).any()))
    throw ParamRange("discrete-time probabilities must lie in [0,1]");
}

std::vector<std::uint8_t> initial_states(int n, std::span<const int> init) {
  if (init.empty()) throw ParamRange("initial infected set is empty");
  std::vector<std::uint8_t> x(static_cast<std::size_t>(n), 0);
  for (int i : init) {
    if (i < 0 || i >= n) throw ParamRange("initial infected node " + std::to_string(i) + " out of range");
    x[static_cast<std::size_t>(i)] = 1;
  }
  return x;
}

// (target, edge) lists: edge e lets `source` infect `target`.
struct InfectionLists {
  std::vector<std::vector<std::pair<int, std::size_t>>> out;  // by source

  explicit InfectionLists(const DynamicGraph& g) : out(static_cast<std::size_t>(g.size())) {
    const auto edges = g.edges();
    for (std::size_t e = 0; e < edges.size(); ++e) {
      // A(i, j) = 1: j infects i.
      out[static_cast<std::size_t>(edges[e].j)].emplace_back(edges[e].i, e);
      if (g.kind() == GraphKind::Amei) out[static_cast<std::size_t>(edges[e].i)].emplace_back(edges[e].j, e);
    }
  }
};

// Per-step node uniforms, shared by the lazy and fixed-path simulators.
struct NodeStreams {
  std::uint64_t node;
  std::uint64_t reinfect;
  std::uint64_t n;

  NodeStreams(std::uint64_t seed, int nodes)
      : node(derive_seed(seed, {tag("node")})), reinfect(derive_seed(seed, {tag("reinfect")})),
        n(static_cast<std::uint64_t>(nodes)) {}
  double recover(int k, int i) const {
    return counter_uniform(node, (static_cast<std::uint64_t>(k) * n + static_cast<std::uint64_t>(i)) * 2);
  }
  double infect(int k, int i) const {
    return counter_uniform(node, (static_cast<std::uint64_t>(k) * n + static_cast<std::uint64_t>(i)) * 2 + 1);
  }
  int reseed(int k) const {
    return static_cast<int>(std::min<double>(counter_uniform(reinfect, static_cast<std::uint64_t>(k)) *
                                                 static_cast<double>(n),
                                             static_cast<double>(n - 1)));
  }
};

// Immutable per-edge data for lazy discrete-time sampling.
struct LazyEdgeModel {
  enum class Kind : std::uint8_t { StaticOn, StaticOff, TwoState, General };
  struct EdgeData {
    Kind kind;
    double pi_on = 0.0;    // two-state: stationary on-probability
    double lambda = 0.0;   // two-state: 1 - a - b
    Vector pi;             // general
  };
  const DynamicGraph& graph;
  std::vector<EdgeData> data;

  explicit LazyEdgeModel(const DynamicGraph& g) : graph(g) {
    for (const Edge& e : g.edges()) {
      const EdgeProcess& p = e.process;
      EdgeData d;
      if (p.is_static()) {
        d.kind = p.output(0) ? Kind::StaticOn : Kind::StaticOff;
      } else if (p.chain().size() == 2) {
        const std::size_t on = p.output(1) == 1 ? 1 : 0;
        const std::size_t off = 1 - on;
        const Matrix& P = p.chain().dynamics();
        const double a = P(static_cast<Eigen::Index>(off), static_cast<Eigen::Index>(on));
        const double b = P(static_cast<Eigen::Index>(on), static_cast<Eigen::Index>(off));
        d.kind = Kind::TwoState;
        d.pi_on = a / (a + b);
        d.lambda = 1.0 - a - b;
        d.pi = stationary_distribution(p.chain());
      } else {
        d.kind = Kind::General;
        d.pi = stationary_distribution(p.chain());
      }
      data.push_back(std::move(d));
    }
  }
};

// Mutable lazy state for one path. Chain state is the output value for
// two-state edges and the chain state index otherwise.
class LazyEdges {
 public:
  LazyEdges(const LazyEdgeModel& model, std::uint64_t seed, const PathOptions& options)
      : model_(model), seed_(seed), options_(options), last_step_(model.data.size(), -1),
        state_(model.data.size(), 0), known_(model.data.size(), 0) {}

  std::uint8_t value(std::size_t e, int k) {
    const auto& d = model_.data[e];
    if (d.kind == LazyEdgeModel::Kind::StaticOn) return 1;
    if (d.kind == LazyEdgeModel::Kind::StaticOff) return 0;
    if (known_[e] && last_step_[e] == k) return output(e);
    const Edge& edge = model_.graph.edges()[e];
    const std::uint64_t key = derive_seed(seed_, {tag("edge"), pair_key(edge.i, edge.j)});
    const double u = counter_uniform(key, static_cast<std::uint64_t>(k));

    if (!known_[e]) {
      known_[e] = 1;
      if (options_.stationary_start) {
        // Never looked at before: its state at step k is stationary.
        last_step_[e] = k;
        state_[e] = d.kind == LazyEdgeModel::Kind::TwoState ? (u < d.pi_on ? 1u : 0u)
                                                             : static_cast<std::uint32_t>(draw_categorical(d.pi, u));
        return output(e);
      }
      const auto s0 = edge.process.chain().initial_state();
      state_[e] = d.kind == LazyEdgeModel::Kind::TwoState ? edge.process.output(s0) : static_cast<std::uint32_t>(s0);
      last_step_[e] = 0;
      if (k == 0) return output(e);
    }

    const int gap = k - last_step_[e];
    if (d.kind == LazyEdgeModel::Kind::TwoState) {
      const double x = state_[e] ? 1.0 : 0.0;
      const double p_on = d.pi_on + std::pow(d.lambda, gap) * (x - d.pi_on);
      state_[e] = u < p_on ? 1u : 0u;
    } else {
      const Matrix& P = edge.process.chain().dynamics();
      std::size_t s = state_[e];
      for (int step = last_step_[e] + 1; step <= k; ++step)
        s = draw_categorical(P.row(static_cast<Eigen::Index>(s)).transpose(),
                             counter_uniform(key, static_cast<std::uint64_t>(step)));
      state_[e] = static_cast<std::uint32_t>(s);
    }
    last_step_[e] = k;
    return output(e);
  }

 private:
  std::uint8_t output(std::size_t e) const {
    if (model_.data[e].kind == LazyEdgeModel::Kind::TwoState) return static_cast<std::uint8_t>(state_[e]);
    return model_.graph.edges()[e].process.output(state_[e]);
  }

  const LazyEdgeModel& model_;
  std::uint64_t seed_;
  PathOptions options_;
  std::vector<int> last_step_;
  std::vector<std::uint32_t> state_;
  std::vector<std::uint8_t> known_;
};

// One synchronous step. `edge_on(e)` gives A(k) for edge e.
template <class EdgeOn>
void dt_step(const InfectionLists& lists, const EpidemicParams& params, const NodeStreams& streams, int k,
             std::vector<std::uint8_t>& x, std::vector<int>& pressure, std::vector<int>& touched, EdgeOn&& edge_on) {
  const int n = static_cast<int>(x.size());
  touched.clear();
  for (int j = 0; j < n; ++j) {
    if (!x[static_cast<std::size_t>(j)]) continue;
    for (const auto& [i, e] : lists.out[static_cast<std::size_t>(j)]) {
      if (x[static_cast<std::size_t>(i)]) continue;
      if (!edge_on(e)) continue;
      if (pressure[static_cast<std::size_t>(i)]++ == 0) touched.push_back(i);
    }
  }
  for (int j = 0; j < n; ++j)
    if (x[static_cast<std::size_t>(j)] && streams.recover(k, j) < params.delta[j]) x[static_cast<std::size_t>(j)] = 0;
  std::sort(touched.begin(), touched.end());
  for (int i : touched) {
    const int c = pressure[static_cast<std::size_t>(i)];
    pressure[static_cast<std::size_t>(i)] = 0;
    const double p_inf = -std::expm1(static_cast<double>(c) * std::log1p(-params.beta[i]));
    if (streams.infect(k, i) < p_inf) x[static_cast<std::size_t>(i)] = 1;
  }
}

// Shared driver for the lazy and fixed-path simulators.
template <class EdgeOnAt>
SimulationTrace run_dt(const DynamicGraph& graph, const EpidemicParams& params, int steps,
                       std::span<const int> init_infected, bool reinfect, std::uint64_t seed,
                       const SimOptions& options, EdgeOnAt&& edge_on_at) {
  const int n = graph.size();
  check_sim_params(params, n, true);
  if (steps < 0) throw ParamRange("steps must be >= 0");
  const InfectionLists lists(graph);
  const NodeStreams streams(seed, n);
  std::vector<std::uint8_t> x = initial_states(n, init_infected);
  std::vector<int> pressure(static_cast<std::size_t>(n), 0);
  std::vector<int> touched;

  SimulationTrace trace;
  trace.seed = seed;
  auto record = [&](int k) {
    trace.times.push_back(static_cast<double>(k));
    trace.infected_counts.push_back(static_cast<int>(std::count(x.begin(), x.end(), std::uint8_t{1})));
    if (options.record_states) trace.states.push_back(x);
  };
  record(0);
  for (int k = 0; k < steps; ++k) {
    dt_step(lists, params, streams, k, x, pressure, touched, [&](std::size_t e) { return edge_on_at(e, k); });
    if (reinfect && std::none_of(x.begin(), x.end(), [](std::uint8_t v) { return v != 0; })) {
      x[static_cast<std::size_t>(streams.reseed(k))] = 1;
      ++trace.reinfections;
    }
    record(k + 1);
  }
  return trace;
}

}  // namespace

std::vector<int> all_nodes(int n) {
  std::vector<int> v(static_cast<std::size_t>(n));
  std::iota(v.begin(), v.end(), 0);
  return v;
}

std::uint64_t path_seed(std::uint64_t seed, std::size_t p) { return derive_seed(seed, {tag("path"), p}); }

// Discrete time -----------------------------------------------------------------

SimulationTrace simulate_dt_exact(const DynamicGraph& graph, const EpidemicParams& params, int steps,
                                  std::span<const int> init_infected, bool reinfect, std::uint64_t seed,
                                  SimOptions options) {
  if (graph.time() != TimeKind::Discrete) throw WrongKind("discrete-time simulation needs a discrete-time graph");
  const LazyEdgeModel model(graph);
  LazyEdges edges(model, seed, options.path);
  return run_dt(graph, params, steps, init_infected, reinfect, seed, options,
                [&](std::size_t e, int k) { return edges.value(e, k) != 0; });
}

SimulationTrace simulate_dt_on_path(const DynamicGraph& graph, const GraphPath& path, const EpidemicParams& params,
                                    int steps, std::span<const int> init_infected, bool reinfect,
                                    std::uint64_t seed, SimOptions options) {
  if (path.time != TimeKind::Discrete) throw WrongKind("fixed-path simulation needs a discrete graph path");
  if (steps > static_cast<int>(path.horizon)) throw ParamRange("path horizon shorter than the requested steps");
  std::vector<std::uint8_t> current = path.initial;
  std::size_t next_event = 0;
  int at = 0;
  auto advance = [&](int k) {
    while (at < k) {
      ++at;
      while (next_event < path.events.size() && path.events[next_event].time <= static_cast<double>(at)) {
        current[path.events[next_event].edge] = path.events[next_event].value;
        ++next_event;
      }
    }
  };
  return run_dt(graph, params, steps, init_infected, reinfect, seed, options, [&](std::size_t e, int k) {
    advance(k);
    return current[e] != 0;
  });
}

// Continuous time -----------------------------------------------------------------

SimulationTrace simulate_ct_exact(const DynamicGraph& graph, const EpidemicParams& params, double horizon,
                                  std::span<const int> init_infected, std::uint64_t seed, SimOptions options) {
  if (graph.time() != TimeKind::Continuous) throw WrongKind("continuous-time simulation needs a continuous-time graph");
  if (!(horizon > 0.0)) throw ParamRange("horizon must be positive");
  const int n = graph.size();
  check_sim_params(params, n, false);
  const auto edges = graph.edges();
  const std::size_t m = edges.size();
  Engine engine = make_engine(seed, {tag("ct")});
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  std::vector<std::size_t> state(m);
  std::vector<std::uint8_t> on(m);
  std::vector<double> edge_rate(m);
  for (std::size_t e = 0; e < m; ++e) {
    const auto& chain = edges[e].process.chain();
    state[e] = options.path.stationary_start ? draw_categorical(stationary_distribution(chain), unif(engine))
                                             : chain.initial_state();
    on[e] = edges[e].process.output(state[e]);
    const auto s = static_cast<Eigen::Index>(state[e]);
    edge_rate[e] = -chain.dynamics()(s, s);
  }
  const InfectionLists lists(graph);
  std::vector<std::uint8_t> x = initial_states(n, init_infected);
  int infected = static_cast<int>(std::count(x.begin(), x.end(), std::uint8_t{1}));

  SimulationTrace trace;
  trace.seed = seed;
  auto record = [&](double t) {
    trace.times.push_back(t);
    trace.infected_counts.push_back(infected);
    if (options.record_states) trace.states.push_back(x);
  };
  record(0.0);

  std::vector<double> node_rate(static_cast<std::size_t>(n));
  double t = 0.0;
  for (std::size_t event = 0; event < options.max_events && infected > 0; ++event) {
    // Rates are rebuilt after every event; memorylessness makes this exact.
    double node_total = 0.0;
    double potential = 0.0;
    std::fill(node_rate.begin(), node_rate.end(), 0.0);
    for (int j = 0; j < n; ++j) {
      if (!x[static_cast<std::size_t>(j)]) continue;
      node_rate[static_cast<std::size_t>(j)] += params.delta[j];
      potential += params.delta[j];
      for (const auto& [i, e] : lists.out[static_cast<std::size_t>(j)]) {
        if (x[static_cast<std::size_t>(i)]) continue;
        potential += params.beta[i];
        if (on[e]) node_rate[static_cast<std::size_t>(i)] += params.beta[i];
      }
    }
    for (double r : node_rate) node_total += r;
    if (potential == 0.0) break;  // no node event can ever fire
    double edge_total = 0.0;
    for (double r : edge_rate) edge_total += r;
    const double total = node_total + edge_total;
    if (!(total > 0.0)) break;

    t += std::exponential_distribution<double>(total)(engine);
    if (t > horizon) break;
    double target = unif(engine) * total;
    if (target < node_total) {
      int pick = n - 1;
      for (int i = 0; i < n; ++i) {
        target -= node_rate[static_cast<std::size_t>(i)];
        if (target < 0.0 && node_rate[static_cast<std::size_t>(i)] > 0.0) {
          pick = i;
          break;
        }
      }
      while (node_rate[static_cast<std::size_t>(pick)] == 0.0) --pick;
      auto& xi = x[static_cast<std::size_t>(pick)];
      xi = xi ? 0 : 1;
      infected += xi ? 1 : -1;
      record(t);
      continue;
    }
    target -= node_total;
    std::size_t pick = m - 1;
    for (std::size_t e = 0; e < m; ++e) {
      target -= edge_rate[e];
      if (target < 0.0 && edge_rate[e] > 0.0) {
        pick = e;
        break;
      }
    }
    while (edge_rate[pick] == 0.0) --pick;
    const Matrix& q = edges[pick].process.chain().dynamics();
    Vector w = q.row(static_cast<Eigen::Index>(state[pick])).transpose();
    w[static_cast<Eigen::Index>(state[pick])] = 0.0;
    state[pick] = draw_categorical(w, unif(engine));
    on[pick] = edges[pick].process.output(state[pick]);
    const auto s = static_cast<Eigen::Index>(state[pick]);
    edge_rate[pick] = -q(s, s);
  }
  return trace;
}

// Linear systems ----------------------------------------------------------------

LinearTrajectory propagate_linear(const DynamicGraph& graph, const GraphPath& path, const EpidemicParams& params,
                                  const Vector& p0, LinearOptions options) {
  const int n = graph.size();
  if (p0.size() != n) throw ParamRange("initial vector has the wrong length");
  if ((p0.array() < 0.0).any()) throw ParamRange("initial vector must be nonnegative");
  check_sim_params(params, n, path.time == TimeKind::Discrete);

  std::vector<std::uint8_t> current = path.initial;
  LinearTrajectory out;
  Vector p = p0;
  double log_norm = 0.0;
  auto normalise = [&] {
    const double nrm = p.norm();
    if (nrm == 0.0) {
      log_norm = -std::numeric_limits<double>::infinity();
      return;
    }
    log_norm += std::log(nrm);
    p /= nrm;
  };
  auto record = [&](double t) {
    if ((p.array() < -1e-12).any()) throw ToleranceFailure("linear state lost nonnegativity");
    out.times.push_back(t);
    out.log_norm.push_back(log_norm);
    if (options.keep_direction) out.direction.push_back(p);
  };
  normalise();
  record(0.0);
  std::size_t next = 0;
  auto apply_events = [&](double upto) {
    while (next < path.events.size() && path.events[next].time <= upto) {
      current[path.events[next].edge] = path.events[next].value;
      ++next;
    }
  };

  if (path.time == TimeKind::Discrete) {
    const int steps = static_cast<int>(path.horizon);
    for (int k = 0; k < steps; ++k) {
      apply_events(static_cast<double>(k));
      if (std::isfinite(log_norm)) {
        const Matrix a = adjacency(graph, current);
        p = params.beta.asDiagonal() * (a * p) + (Vector::Ones(n) - params.delta).cwiseProduct(p);
        p = p.cwiseMax(0.0);
        normalise();
      }
      record(static_cast<double>(k + 1));
    }
    return out;
  }

  namespace ode = boost::numeric::odeint;
  using State = std::vector<double>;
  Matrix m;
  auto rebuild = [&] {
    m = params.beta.asDiagonal() * adjacency(graph, current);
    m.diagonal() -= params.delta;
  };
  auto system = [&](const State& y, State& dydt, double) {
    Eigen::Map<const Vector> yv(y.data(), n);
    Eigen::Map<Vector> dv(dydt.data(), n);
    dv.noalias() = m * yv;
  };
  auto stepper = ode::make_controlled(options.tolerance, options.tolerance, ode::runge_kutta_dopri5<State>());

  // Merge switch times and output sample times.
  std::vector<double> cuts;
  for (const auto& ev : path.events)
    if (ev.time > 0.0 && ev.time < path.horizon) cuts.push_back(ev.time);
  std::vector<double> samples;
  if (options.sample_interval > 0.0)
    for (double s = options.sample_interval; s < path.horizon; s += options.sample_interval) samples.push_back(s);
  samples.push_back(path.horizon);
  std::vector<double> all = cuts;
  all.insert(all.end(), samples.begin(), samples.end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());

  apply_events(0.0);
  rebuild();
  double t = 0.0;
  std::size_t sample_at = 0;
  State y(static_cast<std::size_t>(n));
  for (double stop : all) {
    if (std::isfinite(log_norm) && stop > t) {
      Eigen::Map<Vector>(y.data(), n) = p;
      try {
        ode::integrate_adaptive(stepper, system, y, t, stop, std::min(0.1, stop - t));
      } catch (const std::exception& ex) {
        throw ToleranceFailure(std::string("integrator failed: ") + ex.what());
      }
      p = Eigen::Map<Vector>(y.data(), n);
      if (!p.allFinite()) throw ToleranceFailure("integrator produced non-finite values");
      p = p.cwiseMax(0.0);
      normalise();
    }
    t = stop;
    const bool is_sample = sample_at < samples.size() && samples[sample_at] == stop;
    if (is_sample) {
      record(stop);
      ++sample_at;
    }
    const auto before = next;
    apply_events(stop);
    if (next != before) rebuild();
  }
  return out;
}

DecayEstimate decay_rate_estimate(std::span<const LinearTrajectory> trajectories, double burn_in) {
  if (trajectories.size() < 20)
    throw InsufficientData("decay estimation needs at least 20 trajectories, got " +
                           std::to_string(trajectories.size()));
  DecayEstimate est{};
  for (const auto& tr : trajectories) {
    double st = 0, sy = 0, stt = 0, sty = 0;
    int count = 0;
    for (std::size_t k = 0; k < tr.times.size(); ++k) {
      if (tr.times[k] < burn_in || !std::isfinite(tr.log_norm[k])) continue;
      st += tr.times[k], sy += tr.log_norm[k];
      stt += tr.times[k] * tr.times[k], sty += tr.times[k] * tr.log_norm[k];
      ++count;
    }
    if (count < 2) throw InsufficientData("a trajectory has fewer than two points after burn-in");
    const double c = count;
    const double slope = (c * sty - st * sy) / (c * stt - st * st);
    est.rates.push_back(-slope);
  }
  const double n = static_cast<double>(est.rates.size());
  est.rate = std::accumulate(est.rates.begin(), est.rates.end(), 0.0) / n;
  double ss = 0.0;
  for (double r : est.rates) ss += (r - est.rate) * (r - est.rate);
  est.standard_error = std::sqrt(ss / (n - 1.0) / n);
  est.ci_low = est.rate - 1.96 * est.standard_error;
  est.ci_high = est.rate + 1.96 * est.standard_error;
  return est;
}

// Empirical threshold ------------------------------------------------------------

namespace {

EmpiricalThresholdReport summarise_empirical(std::span<const double> grid, int paths, int steps,
                                             const std::vector<int>& finals) {
  EmpiricalThresholdReport r;
  r.beta_grid.assign(grid.begin(), grid.end());
  r.paths = paths;
  r.steps = steps;
  for (std::size_t b = 0; b < grid.size(); ++b) {
    long sum = 0;
    for (int p = 0; p < paths; ++p) sum += finals[b * static_cast<std::size_t>(paths) + static_cast<std::size_t>(p)];
    const double y = static_cast<double>(sum) / paths;
    r.y_star.push_back(y);
    r.z_star.push_back(y - 1.0);
    if (y - 1.0 < 1.0) r.beta_star = grid[b];
  }
  return r;
}

void check_empirical(const DynamicGraph& graph, std::span<const double> grid, int paths, int steps) {
  if (graph.time() != TimeKind::Discrete) throw WrongKind("the threshold experiment is discrete-time");
  if (paths < 1 || steps < 1) throw ParamRange("paths and steps must be positive");
  if (grid.empty()) throw ParamRange("beta grid is empty");
  if (!std::is_sorted(grid.begin(), grid.end())) throw ParamRange("beta grid must be increasing");
}

}  // namespace

EmpiricalThresholdReport empirical_threshold(const DynamicGraph& graph, double delta,
                                             std::span<const double> beta_grid, int paths, int steps,
                                             std::uint64_t seed, EmpiricalOptions options) {
  check_empirical(graph, beta_grid, paths, steps);
  const int n = graph.size();
  const std::vector<int> init = options.init_infected.value_or(all_nodes(n));
  const LazyEdgeModel model(graph);
  const auto tasks = static_cast<std::int64_t>(beta_grid.size()) * paths;
  std::vector<int> finals(static_cast<std::size_t>(tasks), 0);
  std::vector<std::string> errors(static_cast<std::size_t>(tasks));

#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t task = 0; task < tasks; ++task) {
    const auto b = static_cast<std::size_t>(task / paths);
    const auto p = static_cast<std::size_t>(task % paths);
    try {
      const auto ps = path_seed(seed, p);
      const EpidemicParams params = EpidemicParams::homogeneous(n, beta_grid[b], delta);
      LazyEdges edges(model, ps, options.path);
      SimOptions sim;
      sim.path = options.path;
      const auto trace = run_dt(graph, params, steps, init, true, ps, sim,
                                [&](std::size_t e, int k) { return edges.value(e, k) != 0; });
      finals[static_cast<std::size_t>(task)] = trace.infected_counts.back();
    } catch (const std::exception& ex) {
      errors[static_cast<std::size_t>(task)] = ex.what();
    }
  }
  for (const auto& e : errors)
    if (!e.empty()) throw ParamRange(e);
  return summarise_empirical(beta_grid, paths, steps, finals);
}

namespace reference {

EmpiricalThresholdReport empirical_threshold(const DynamicGraph& graph, double delta,
                                             std::span<const double> beta_grid, int paths, int steps,
                                             std::uint64_t seed, EmpiricalOptions options) {
  check_empirical(graph, beta_grid, paths, steps);
  const int n = graph.size();
  const std::vector<int> init = options.init_infected.value_or(all_nodes(n));
  std::vector<int> finals;
  SimOptions sim;
  sim.path = options.path;
  for (double beta : beta_grid)
    for (int p = 0; p < paths; ++p) {
      const auto ps = path_seed(seed, static_cast<std::size_t>(p));
      const auto trace =
          simulate_dt_exact(graph, EpidemicParams::homogeneous(n, beta, delta), steps, init, true, ps, sim);
      finals.push_back(trace.infected_counts.back());
    }
  return summarise_empirical(beta_grid, paths, steps, finals);
}

}  // namespace reference

}  // namespace tempest
