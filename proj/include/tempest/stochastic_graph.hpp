#pragma once

// Aggregated-Markovian edge processes and the dynamic graphs built from them.
//
// Adjacency convention: A(i, j) = 1 means node j can infect node i. AMEI graphs
// store each undirected pair once (i < j) and mirror it; AMAI graphs store the
// ordered pairs (i, j) and (j, i) as two independent processes.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace tempest {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class TimeKind { Continuous, Discrete };
enum class GraphKind { Amei, Amai };

/// Finite-state time-homogeneous Markov chain: generator Q (continuous) or
/// transition matrix P (discrete).
class MarkovChain {
 public:
  static MarkovChain continuous(Matrix generator, std::vector<std::string> labels = {},
                                std::size_t initial_state = 0);
  static MarkovChain discrete(Matrix transition, std::vector<std::string> labels = {},
                              std::size_t initial_state = 0);

  std::size_t size() const { return static_cast<std::size_t>(dynamics_.rows()); }
  TimeKind time() const { return time_; }
  const Matrix& dynamics() const { return dynamics_; }
  const std::vector<std::string>& labels() const { return labels_; }
  std::size_t initial_state() const { return initial_; }

  /// Strong connectivity of the positive-rate (positive-probability) digraph.
  bool is_irreducible() const;
  /// Discrete chains only; continuous chains are reported aperiodic.
  bool is_aperiodic() const;

 private:
  MarkovChain(Matrix m, TimeKind t, std::vector<std::string> labels, std::size_t initial);

  Matrix dynamics_;
  TimeKind time_;
  std::vector<std::string> labels_;
  std::size_t initial_;
};

/// sigma = f(theta): a Markov chain plus a {0,1} output map.
class EdgeProcess {
 public:
  EdgeProcess(MarkovChain chain, std::vector<std::uint8_t> output);

  static EdgeProcess static_on(TimeKind time);
  static EdgeProcess static_off(TimeKind time);

  const MarkovChain& chain() const { return chain_; }
  std::span<const std::uint8_t> output() const { return output_; }
  std::uint8_t output(std::size_t state) const { return output_[state]; }
  bool is_static() const { return static_; }
  TimeKind time() const { return chain_.time(); }
  /// True for plain two-state edges whose output is the identity (off=0, on=1).
  bool is_markov2() const;

 private:
  EdgeProcess(MarkovChain chain, std::vector<std::uint8_t> output, bool declared_static);

  MarkovChain chain_;
  std::vector<std::uint8_t> output_;
  bool static_ = false;
};

struct Edge {
  int i;
  int j;
  EdgeProcess process;
};

class DynamicGraph {
 public:
  DynamicGraph(int n, GraphKind kind, TimeKind time);

  /// AMEI pairs are normalised to i < j. Rejects self loops, duplicates and
  /// processes whose time kind differs from the graph's.
  void add_edge(int i, int j, EdgeProcess process);

  int size() const { return n_; }
  GraphKind kind() const { return kind_; }
  TimeKind time() const { return time_; }
  std::span<const Edge> edges() const { return edges_; }
  const Edge* find(int i, int j) const;

 private:
  int n_;
  GraphKind kind_;
  TimeKind time_;
  std::vector<Edge> edges_;
  std::vector<std::size_t> sorted_;  // edge indices ordered by (i, j)
};

/// Entrywise stationary probability that each (di)edge is on.
struct MeanMatrix {
  Matrix values;
  GraphKind kind = GraphKind::Amei;

  int size() const { return static_cast<int>(values.rows()); }
};

Vector stationary_distribution(const MarkovChain& chain);
double edge_on_probability(const EdgeProcess& edge);
MeanMatrix mean_matrix(const DynamicGraph& graph);
/// (sgn A)_ij = 1 iff A_ij > 0.
Matrix support_matrix(const MeanMatrix& mean);

// Builders -----------------------------------------------------------------

/// Two-state on/off edge: off->on at q, on->off at r (rates, or per-step
/// probabilities for TimeKind::Discrete). State 0 is off, state 1 is on.
EdgeProcess build_edge_markovian(double q, double r, TimeKind time = TimeKind::Continuous);

/// Coxian on/off chain: on-phases c_1..c_n then off-phases d_1..d_m.
/// c_i -> c_{i+1} at up[i], c_i -> d_1 at exit[i], d_j -> d_{j+1} at down[j],
/// d_j -> c_1 at ret[j]. States are ordered c_1..c_n, d_1..d_m.
EdgeProcess build_coxian_edge(std::span<const double> up, std::span<const double> exit,
                              std::span<const double> down, std::span<const double> ret);

// Paths --------------------------------------------------------------------

struct PathOptions {
  /// Draw the initial chain state from the stationary distribution (default)
  /// or start from MarkovChain::initial_state().
  bool stationary_start = true;
};

/// Piecewise-constant {0,1} trajectory. Continuous: times[0] = 0 and each
/// further entry is an output switch. Discrete: one entry per step 0..horizon.
struct EdgePath {
  TimeKind time = TimeKind::Continuous;
  double horizon = 0.0;
  std::vector<double> times;
  std::vector<std::uint8_t> values;

  std::uint8_t value_at(double t) const;
  /// Fraction of [0, horizon] (or of the steps) spent on.
  double on_fraction() const;
};

EdgePath sample_edge_path(const EdgeProcess& edge, double horizon, std::uint64_t seed,
                          PathOptions options = {});

/// Jump chain of the hidden state, for occupancy checks: visited states and
/// holding times (continuous) or one state per step (discrete).
struct StatePath {
  std::vector<std::size_t> states;
  std::vector<double> holding;
};
StatePath sample_state_path(const MarkovChain& chain, std::size_t events, std::uint64_t seed,
                            PathOptions options = {});

struct SwitchEvent {
  double time;
  std::size_t edge;
  std::uint8_t value;
};

/// All edge paths of a graph merged into one time-ordered switch list.
struct GraphPath {
  TimeKind time = TimeKind::Continuous;
  double horizon = 0.0;
  std::vector<std::uint8_t> initial;  // per edge
  std::vector<SwitchEvent> events;    // sorted by (time, edge)
};

GraphPath sample_graph_path(const DynamicGraph& graph, double horizon, std::uint64_t seed,
                            PathOptions options = {});

/// Adjacency for a per-edge on/off vector.
Matrix adjacency(const DynamicGraph& graph, std::span<const std::uint8_t> edge_values);

// Presets ------------------------------------------------------------------

/// How the 1/8 in N(1/2, 1/8) is read.
enum class GaussianScale { Variance, StdDev };

struct ExperimentGraph {
  DynamicGraph graph;
  Matrix er_adjacency;  // underlying Erdos-Renyi skeleton
  std::vector<double> down_probabilities;  // r_ij per stored edge, in edge order
};

/// Discrete-time AMEI graph: ER(n, er_prob) skeleton, on each edge a two-state
/// chain with r ~ N(1/2, 1/8) clamped to [0,1] and q = 1 - r. Edges with q = 0
/// or r = 0 have a single recurrent state and are stored as static.
ExperimentGraph build_experiment_graph_iv(int n, double er_prob, std::uint64_t seed,
                                          GaussianScale scale = GaussianScale::Variance);

/// AMAI graph: static ring arcs i -> i+1 (mod n) plus dynamic two-state arcs on
/// every other ordered pair, each with stationary on-probability r (switching
/// rate scale `rate`).
DynamicGraph build_small_world(int n, double r, double rate = 1.0,
                               TimeKind time = TimeKind::Continuous);

/// Complete AMEI graph with identical two-state edges (activation q, deactivation r).
DynamicGraph build_edge_markovian_complete(int n, double q, double r,
                                           TimeKind time = TimeKind::Continuous);

}  // namespace tempest
