#include "tempest/stochastic_graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

#include <Eigen/LU>

#include "tempest/errors.hpp"
#include "tempest/rng.hpp"

namespace tempest {

namespace {

constexpr double kRowTolerance = 1e-12;
constexpr double kStationaryResidual = 1e-10;

std::vector<std::string> default_labels(std::size_t n) {
  std::vector<std::string> labels(n);
  for (std::size_t k = 0; k < n; ++k) labels[k] = std::to_string(k);
  return labels;
}

// Reachability from `start` along positive off-diagonal entries (or positive
// entries, for transition matrices).
std::vector<bool> reachable(const Matrix& m, std::size_t start, bool transpose) {
  const auto n = static_cast<std::size_t>(m.rows());
  std::vector<bool> seen(n, false);
  std::vector<std::size_t> stack{start};
  seen[start] = true;
  while (!stack.empty()) {
    const auto u = stack.back();
    stack.pop_back();
    for (std::size_t v = 0; v < n; ++v) {
      if (seen[v] || u == v) continue;
      const double w = transpose ? m(v, u) : m(u, v);
      if (w > 0.0) {
        seen[v] = true;
        stack.push_back(v);
      }
    }
  }
  return seen;
}

std::size_t draw_categorical(const Vector& weights, double u) {
  const double total = weights.sum();
  double acc = 0.0;
  const double target = u * total;
  std::size_t last_positive = 0;
  for (Eigen::Index k = 0; k < weights.size(); ++k) {
    if (weights[k] <= 0.0) continue;
    last_positive = static_cast<std::size_t>(k);
    acc += weights[k];
    if (target < acc) return static_cast<std::size_t>(k);
  }
  return last_positive;
}

std::size_t initial_state_for(const MarkovChain& chain, const PathOptions& options, double u) {
  if (!options.stationary_start || chain.size() == 1) return chain.initial_state();
  return draw_categorical(stationary_distribution(chain), u);
}

// Off-diagonal jump weights out of `state` for a continuous chain.
Vector jump_weights(const Matrix& q, std::size_t state) {
  Vector w = q.row(static_cast<Eigen::Index>(state)).transpose();
  w[static_cast<Eigen::Index>(state)] = 0.0;
  return w.cwiseMax(0.0);
}

}  // namespace

// MarkovChain ---------------------------------------------------------------

MarkovChain::MarkovChain(Matrix m, TimeKind t, std::vector<std::string> labels, std::size_t initial)
    : dynamics_(std::move(m)), time_(t), labels_(std::move(labels)), initial_(initial) {
  if (dynamics_.rows() == 0 || dynamics_.rows() != dynamics_.cols())
    throw InvalidChain("chain matrix must be square and non-empty");
  const auto n = static_cast<std::size_t>(dynamics_.rows());
  if (labels_.empty()) labels_ = default_labels(n);
  if (labels_.size() != n) throw InvalidChain("label count does not match chain size");
  if (initial_ >= n) throw InvalidChain("initial state out of range");
  if (!dynamics_.allFinite()) throw InvalidChain("chain matrix has non-finite entries");

  for (Eigen::Index r = 0; r < dynamics_.rows(); ++r) {
    const double scale = std::max(1.0, dynamics_.row(r).cwiseAbs().maxCoeff());
    const double sum = dynamics_.row(r).sum();
    if (time_ == TimeKind::Continuous) {
      for (Eigen::Index c = 0; c < dynamics_.cols(); ++c)
        if (r != c && dynamics_(r, c) < 0.0) throw InvalidChain("negative off-diagonal generator rate");
      if (std::abs(sum) > kRowTolerance * scale) throw InvalidChain("generator row does not sum to 0");
    } else {
      for (Eigen::Index c = 0; c < dynamics_.cols(); ++c)
        if (dynamics_(r, c) < 0.0 || dynamics_(r, c) > 1.0)
          throw InvalidChain("transition probability outside [0,1]");
      if (std::abs(sum - 1.0) > kRowTolerance) throw InvalidChain("transition row does not sum to 1");
    }
  }
}

MarkovChain MarkovChain::continuous(Matrix generator, std::vector<std::string> labels,
                                    std::size_t initial_state) {
  return MarkovChain(std::move(generator), TimeKind::Continuous, std::move(labels), initial_state);
}

MarkovChain MarkovChain::discrete(Matrix transition, std::vector<std::string> labels,
                                  std::size_t initial_state) {
  return MarkovChain(std::move(transition), TimeKind::Discrete, std::move(labels), initial_state);
}

bool MarkovChain::is_irreducible() const {
  const auto fwd = reachable(dynamics_, 0, false);
  const auto bwd = reachable(dynamics_, 0, true);
  return std::all_of(fwd.begin(), fwd.end(), [](bool b) { return b; }) &&
         std::all_of(bwd.begin(), bwd.end(), [](bool b) { return b; });
}

bool MarkovChain::is_aperiodic() const {
  if (time_ == TimeKind::Continuous) return true;
  const auto n = static_cast<std::size_t>(dynamics_.rows());
  // Period of the class containing state 0: gcd of level differences over edges.
  std::vector<long> level(n, -1);
  std::queue<std::size_t> queue;
  level[0] = 0;
  queue.push(0);
  long period = 0;
  while (!queue.empty()) {
    const auto u = queue.front();
    queue.pop();
    for (std::size_t v = 0; v < n; ++v) {
      if (dynamics_(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v)) <= 0.0) continue;
      if (level[v] < 0) {
        level[v] = level[u] + 1;
        queue.push(v);
      } else {
        period = std::gcd(period, std::abs(level[u] + 1 - level[v]));
      }
    }
  }
  return period == 1;
}

// EdgeProcess ---------------------------------------------------------------

EdgeProcess::EdgeProcess(MarkovChain chain, std::vector<std::uint8_t> output, bool declared_static)
    : chain_(std::move(chain)), output_(std::move(output)), static_(declared_static) {
  if (output_.size() != chain_.size()) throw InvalidChain("output map size does not match chain");
  bool has_on = false, has_off = false;
  for (auto v : output_) {
    if (v > 1) throw InvalidChain("output map must be {0,1}-valued");
    (v ? has_on : has_off) = true;
  }
  if (!static_ && !(has_on && has_off))
    throw InvalidChain("output map of a dynamic edge must be surjective onto {0,1}");
}

EdgeProcess::EdgeProcess(MarkovChain chain, std::vector<std::uint8_t> output)
    : EdgeProcess(std::move(chain), std::move(output), false) {}

EdgeProcess EdgeProcess::static_on(TimeKind time) {
  Matrix m = time == TimeKind::Continuous ? Matrix::Zero(1, 1) : Matrix::Ones(1, 1);
  auto chain = time == TimeKind::Continuous ? MarkovChain::continuous(m, {"on"})
                                            : MarkovChain::discrete(m, {"on"});
  return EdgeProcess(std::move(chain), {1}, true);
}

EdgeProcess EdgeProcess::static_off(TimeKind time) {
  Matrix m = time == TimeKind::Continuous ? Matrix::Zero(1, 1) : Matrix::Ones(1, 1);
  auto chain = time == TimeKind::Continuous ? MarkovChain::continuous(m, {"off"})
                                            : MarkovChain::discrete(m, {"off"});
  return EdgeProcess(std::move(chain), {0}, true);
}

bool EdgeProcess::is_markov2() const {
  return !static_ && chain_.size() == 2 && output_[0] == 0 && output_[1] == 1;
}

// DynamicGraph --------------------------------------------------------------

DynamicGraph::DynamicGraph(int n, GraphKind kind, TimeKind time) : n_(n), kind_(kind), time_(time) {
  if (n < 1) throw InvalidGraph("graph needs at least one node");
}

void DynamicGraph::add_edge(int i, int j, EdgeProcess process) {
  if (i < 0 || j < 0 || i >= n_ || j >= n_) throw InvalidGraph("edge endpoint out of range");
  if (i == j) throw InvalidGraph("self loops are not allowed");
  if (process.time() != time_) throw InvalidGraph("edge time kind differs from graph time kind");
  if (kind_ == GraphKind::Amei && i > j) std::swap(i, j);
  const auto key = std::make_pair(i, j);
  auto it = std::lower_bound(sorted_.begin(), sorted_.end(), key, [&](std::size_t idx, const auto& k) {
    return std::make_pair(edges_[idx].i, edges_[idx].j) < k;
  });
  if (it != sorted_.end() && edges_[*it].i == i && edges_[*it].j == j)
    throw InvalidGraph("duplicate edge (" + std::to_string(i) + "," + std::to_string(j) + ")");
  edges_.push_back(Edge{i, j, std::move(process)});
  sorted_.insert(it, edges_.size() - 1);
}

const Edge* DynamicGraph::find(int i, int j) const {
  if (kind_ == GraphKind::Amei && i > j) std::swap(i, j);
  const auto key = std::make_pair(i, j);
  auto it = std::lower_bound(sorted_.begin(), sorted_.end(), key, [&](std::size_t idx, const auto& k) {
    return std::make_pair(edges_[idx].i, edges_[idx].j) < k;
  });
  if (it != sorted_.end() && edges_[*it].i == i && edges_[*it].j == j) return &edges_[*it];
  return nullptr;
}

// Stationary quantities -----------------------------------------------------

Vector stationary_distribution(const MarkovChain& chain) {
  const auto n = static_cast<Eigen::Index>(chain.size());
  if (n == 1) return Vector::Ones(1);
  if (!chain.is_irreducible()) throw ReducibleChain("chain state graph is not strongly connected");

  // Balance equations pi * G = 0 with G = Q or P - I; last one replaced by sum(pi) = 1.
  Matrix g = chain.dynamics();
  if (chain.time() == TimeKind::Discrete) g -= Matrix::Identity(n, n);
  Matrix system = g.transpose();
  system.row(n - 1).setOnes();
  Vector rhs = Vector::Zero(n);
  rhs[n - 1] = 1.0;
  Vector pi = system.partialPivLu().solve(rhs);

  for (Eigen::Index k = 0; k < n; ++k) {
    if (pi[k] < -kStationaryResidual) throw NumericalFailure("stationary solve produced negative mass");
    pi[k] = std::max(pi[k], 0.0);
  }
  pi /= pi.sum();

  const double scale = std::max(1.0, g.cwiseAbs().maxCoeff());
  const double residual = (pi.transpose() * g).cwiseAbs().maxCoeff();
  if (!(residual <= kStationaryResidual * scale))
    throw NumericalFailure("stationary residual " + std::to_string(residual) + " above tolerance");
  return pi;
}

double edge_on_probability(const EdgeProcess& edge) {
  const Vector pi = stationary_distribution(edge.chain());
  double on = 0.0;
  for (Eigen::Index k = 0; k < pi.size(); ++k)
    if (edge.output(static_cast<std::size_t>(k))) on += pi[k];
  return std::clamp(on, 0.0, 1.0);
}

MeanMatrix mean_matrix(const DynamicGraph& graph) {
  MeanMatrix mean{Matrix::Zero(graph.size(), graph.size()), graph.kind()};
  for (const auto& e : graph.edges()) {
    double p = 0.0;
    try {
      p = edge_on_probability(e.process);
    } catch (const ReducibleChain&) {
      throw ReducibleChain("edge (" + std::to_string(e.i) + "," + std::to_string(e.j) +
                           ") has a reducible chain");
    }
    mean.values(e.i, e.j) = p;
    if (graph.kind() == GraphKind::Amei) mean.values(e.j, e.i) = p;
  }
  return mean;
}

Matrix support_matrix(const MeanMatrix& mean) {
  return (mean.values.array() > 0.0).cast<double>().matrix();
}

// Builders ------------------------------------------------------------------

EdgeProcess build_edge_markovian(double q, double r, TimeKind time) {
  if (!(q > 0.0) || !(r > 0.0)) throw InvalidRates("edge-Markovian rates must be positive");
  Matrix m(2, 2);
  if (time == TimeKind::Continuous) {
    m << -q, q, r, -r;
    return EdgeProcess(MarkovChain::continuous(m, {"off", "on"}), {0, 1});
  }
  if (q > 1.0 || r > 1.0) throw InvalidRates("discrete edge probabilities must lie in (0,1]");
  m << 1.0 - q, q, r, 1.0 - r;
  return EdgeProcess(MarkovChain::discrete(m, {"off", "on"}), {0, 1});
}

EdgeProcess build_coxian_edge(std::span<const double> up, std::span<const double> exit,
                              std::span<const double> down, std::span<const double> ret) {
  const std::size_t n_on = exit.size();
  const std::size_t n_off = ret.size();
  if (n_on == 0 || n_off == 0) throw InvalidRates("Coxian edge needs at least one on and one off phase");
  if (up.size() != n_on - 1 || down.size() != n_off - 1)
    throw InvalidRates("Coxian rate vectors have inconsistent lengths");
  auto check = [](std::span<const double> v) {
    for (double x : v)
      if (!(x >= 0.0) || !std::isfinite(x)) throw InvalidRates("Coxian rates must be finite and >= 0");
  };
  check(up), check(exit), check(down), check(ret);

  const auto total = static_cast<Eigen::Index>(n_on + n_off);
  Matrix q = Matrix::Zero(total, total);
  const auto c = [](std::size_t k) { return static_cast<Eigen::Index>(k); };
  const auto d = [n_on](std::size_t k) { return static_cast<Eigen::Index>(n_on + k); };
  for (std::size_t k = 0; k < n_on; ++k) {
    if (k + 1 < n_on) q(c(k), c(k + 1)) += up[k];
    q(c(k), d(0)) += exit[k];
  }
  for (std::size_t k = 0; k < n_off; ++k) {
    if (k + 1 < n_off) q(d(k), d(k + 1)) += down[k];
    q(d(k), c(0)) += ret[k];
  }
  for (Eigen::Index r = 0; r < total; ++r) {
    const double out = q.row(r).sum();
    if (!(out > 0.0)) throw InvalidRates("Coxian state " + std::to_string(r) + " is absorbing");
    q(r, r) = -out;
  }

  std::vector<std::string> labels;
  std::vector<std::uint8_t> output;
  for (std::size_t k = 0; k < n_on; ++k) labels.push_back("c" + std::to_string(k + 1)), output.push_back(1);
  for (std::size_t k = 0; k < n_off; ++k) labels.push_back("d" + std::to_string(k + 1)), output.push_back(0);
  return EdgeProcess(MarkovChain::continuous(q, std::move(labels)), std::move(output));
}

// Paths ---------------------------------------------------------------------

std::uint8_t EdgePath::value_at(double t) const {
  if (values.empty()) return 0;
  auto it = std::upper_bound(times.begin(), times.end(), t);
  if (it == times.begin()) return values.front();
  return values[static_cast<std::size_t>(std::distance(times.begin(), it) - 1)];
}

double EdgePath::on_fraction() const {
  if (values.empty()) return 0.0;
  if (time == TimeKind::Discrete) {
    const auto on = std::count(values.begin(), values.end(), std::uint8_t{1});
    return static_cast<double>(on) / static_cast<double>(values.size());
  }
  double on = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double end = k + 1 < times.size() ? times[k + 1] : horizon;
    if (values[k]) on += end - times[k];
  }
  return on / horizon;
}

EdgePath sample_edge_path(const EdgeProcess& edge, double horizon, std::uint64_t seed, PathOptions options) {
  if (!(horizon > 0.0)) throw InvalidGraph("path horizon must be positive");
  Engine engine(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const auto& chain = edge.chain();
  std::size_t state = initial_state_for(chain, options, unif(engine));

  EdgePath path;
  path.time = chain.time();
  path.horizon = horizon;
  path.times.push_back(0.0);
  path.values.push_back(edge.output(state));

  if (chain.time() == TimeKind::Discrete) {
    const auto steps = static_cast<long>(std::floor(horizon));
    for (long k = 1; k <= steps; ++k) {
      const Vector row = chain.dynamics().row(static_cast<Eigen::Index>(state)).transpose();
      state = draw_categorical(row, unif(engine));
      path.times.push_back(static_cast<double>(k));
      path.values.push_back(edge.output(state));
    }
    return path;
  }

  double t = 0.0;
  while (true) {
    const double rate = -chain.dynamics()(static_cast<Eigen::Index>(state), static_cast<Eigen::Index>(state));
    if (!(rate > 0.0)) break;
    t += std::exponential_distribution<double>(rate)(engine);
    if (t >= horizon) break;
    state = draw_categorical(jump_weights(chain.dynamics(), state), unif(engine));
    const auto v = edge.output(state);
    if (v != path.values.back()) {
      path.times.push_back(t);
      path.values.push_back(v);
    }
  }
  return path;
}

StatePath sample_state_path(const MarkovChain& chain, std::size_t events, std::uint64_t seed,
                            PathOptions options) {
  Engine engine(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::size_t state = initial_state_for(chain, options, unif(engine));
  StatePath path;
  path.states.reserve(events);
  path.holding.reserve(events);
  for (std::size_t k = 0; k < events; ++k) {
    path.states.push_back(state);
    const auto s = static_cast<Eigen::Index>(state);
    if (chain.time() == TimeKind::Discrete) {
      path.holding.push_back(1.0);
      state = draw_categorical(chain.dynamics().row(s).transpose(), unif(engine));
    } else {
      const double rate = -chain.dynamics()(s, s);
      if (!(rate > 0.0)) {
        path.holding.push_back(1.0);
        continue;
      }
      path.holding.push_back(std::exponential_distribution<double>(rate)(engine));
      state = draw_categorical(jump_weights(chain.dynamics(), state), unif(engine));
    }
  }
  return path;
}

GraphPath sample_graph_path(const DynamicGraph& graph, double horizon, std::uint64_t seed, PathOptions options) {
  GraphPath path;
  path.time = graph.time();
  path.horizon = horizon;
  const auto edges = graph.edges();
  path.initial.resize(edges.size());
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto stream = derive_seed(seed, {tag("edge"), pair_key(edges[e].i, edges[e].j)});
    const auto ep = sample_edge_path(edges[e].process, horizon, stream, options);
    path.initial[e] = ep.values.front();
    std::uint8_t current = ep.values.front();
    for (std::size_t k = 1; k < ep.times.size(); ++k) {
      if (ep.values[k] == current) continue;
      current = ep.values[k];
      path.events.push_back(SwitchEvent{ep.times[k], e, current});
    }
  }
  std::sort(path.events.begin(), path.events.end(), [](const SwitchEvent& a, const SwitchEvent& b) {
    return a.time != b.time ? a.time < b.time : a.edge < b.edge;
  });
  return path;
}

Matrix adjacency(const DynamicGraph& graph, std::span<const std::uint8_t> edge_values) {
  Matrix a = Matrix::Zero(graph.size(), graph.size());
  const auto edges = graph.edges();
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (!edge_values[e]) continue;
    a(edges[e].i, edges[e].j) = 1.0;
    if (graph.kind() == GraphKind::Amei) a(edges[e].j, edges[e].i) = 1.0;
  }
  return a;
}

// Presets -------------------------------------------------------------------

ExperimentGraph build_experiment_graph_iv(int n, double er_prob, std::uint64_t seed, GaussianScale scale) {
  if (n < 2) throw InvalidGraph("experiment graph needs n >= 2");
  if (!(er_prob >= 0.0 && er_prob <= 1.0)) throw InvalidGraph("edge probability must lie in [0,1]");
  const double sd = scale == GaussianScale::Variance ? std::sqrt(1.0 / 8.0) : 1.0 / 8.0;
  const auto er_key = derive_seed(seed, {tag("er")});
  const auto u1_key = derive_seed(seed, {tag("rate-u1")});
  const auto u2_key = derive_seed(seed, {tag("rate-u2")});

  ExperimentGraph out{DynamicGraph(n, GraphKind::Amei, TimeKind::Discrete), Matrix::Zero(n, n), {}};
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const auto key = pair_key(i, j);
      if (!(counter_uniform(er_key, key) < er_prob)) continue;
      out.er_adjacency(i, j) = out.er_adjacency(j, i) = 1.0;
      // Box-Muller on two pair-keyed uniforms.
      const double u1 = 1.0 - counter_uniform(u1_key, key);
      const double u2 = counter_uniform(u2_key, key);
      const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
      const double r = std::clamp(0.5 + sd * z, 0.0, 1.0);
      const double q = 1.0 - r;
      out.down_probabilities.push_back(r);
      if (q <= 0.0)
        out.graph.add_edge(i, j, EdgeProcess::static_off(TimeKind::Discrete));
      else if (r <= 0.0)
        out.graph.add_edge(i, j, EdgeProcess::static_on(TimeKind::Discrete));
      else
        out.graph.add_edge(i, j, build_edge_markovian(q, r, TimeKind::Discrete));
    }
  }
  return out;
}

DynamicGraph build_small_world(int n, double r, double rate, TimeKind time) {
  if (n < 3) throw InvalidGraph("small-world ring needs n >= 3");
  if (!(r > 0.0 && r <= 1.0)) throw InvalidRates("stationary on-probability must lie in (0,1]");
  // Ring arcs i -> i+1 are static; every other ordered pair switches.
  DynamicGraph g(n, GraphKind::Amai, time);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const bool ring = j == (i + 1) % n;
      if (ring || r >= 1.0)
        g.add_edge(i, j, EdgeProcess::static_on(time));
      else
        g.add_edge(i, j, build_edge_markovian(rate * r, rate * (1.0 - r), time));
    }
  }
  return g;
}

DynamicGraph build_edge_markovian_complete(int n, double q, double r, TimeKind time) {
  DynamicGraph g(n, GraphKind::Amei, time);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) g.add_edge(i, j, build_edge_markovian(q, r, time));
  return g;
}

}  // namespace tempest
