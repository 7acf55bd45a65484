#pragma once

// Ground truth for small instances: the exponential-size Kronecker-sum
// condition, random certificate matrices and their expectations, and an
// empirical check of the matrix Chung tail bound.

#include <cstdint>
#include <utility>
#include <vector>

#include "tempest/spectral.hpp"
#include "tempest/stochastic_graph.hpp"
#include "tempest/threshold.hpp"

namespace tempest {

inline constexpr int kMaxOracleEdges = 20;
inline constexpr std::size_t kMaxOracleDimension = 2'000'000;

/// The 2^m subgraphs of a graph with m two-state Markov edges. Label l has
/// edge k present iff bit k of l is set. Statically-on edges live in `base`,
/// statically-off edges are dropped.
struct SubgraphEnumeration {
  int n = 0;
  int m = 0;
  GraphKind kind = GraphKind::Amei;
  std::vector<std::pair<int, int>> pairs;  // endpoints of edge k
  std::vector<double> u;  // off -> on rate of edge k
  std::vector<double> v;  // on -> off rate of edge k
  Matrix base;

  std::size_t labels() const { return std::size_t{1} << m; }
  Matrix f(std::size_t label) const;
};

/// Throws NonMarkovEdge for edges with more than two states or a
/// non-identity output map, TooManyEdges beyond kMaxOracleEdges.
SubgraphEnumeration enumerate_subgraphs(const DynamicGraph& graph);

/// Continuous-time graph on n nodes with m two-state Markov edges on distinct
/// random pairs, rates uniform in [rate_lo, rate_hi].
DynamicGraph random_markov_graph(int n, int m, GraphKind kind, std::uint64_t seed, double rate_lo = 0.2,
                                 double rate_hi = 2.0);

/// Dense generator Pi (2^m x 2^m). Intended for m <= 12.
Matrix pi_matrix(const SubgraphEnumeration& sub);

/// Matrix-free Pi (x) I_n + blockdiag_l(B F_l - D); block l is x[l*n .. l*n+n).
class KroneckerSumOperator final : public LinearOperator {
 public:
  KroneckerSumOperator(const SubgraphEnumeration& sub, const EpidemicParams& params);
  std::size_t dim() const override { return sub_.labels() * static_cast<std::size_t>(sub_.n); }
  void apply(std::span<const double> x, std::span<double> y) const override;
  double max_abs_diagonal() const override;
  double max_offdiagonal_row_sum() const override;

 private:
  void apply_block(std::size_t label, std::span<const double> x, std::span<double> y) const;

  const SubgraphEnumeration& sub_;
  const EpidemicParams& params_;
  std::vector<std::vector<std::pair<int, double>>> base_rows_;  // row i: (j, beta_i) for base arcs
  std::vector<std::vector<std::pair<int, int>>> edge_arcs_;     // edge k: arcs (row, col)
};

/// Dense Pi (x) I_n + sum_l e_l e_l^T (x) (B F_l - D), for tests on tiny cases.
Matrix assemble_kronecker_sum(const SubgraphEnumeration& sub, const EpidemicParams& params);

struct ExponentialVerdict {
  bool stable;
  double eta;
  std::size_t dimension;
};

/// Hurwitz test of the Kronecker-sum matrix. Throws TooManyEdges when the
/// dimension n 2^m exceeds kMaxOracleDimension.
ExponentialVerdict exponential_condition(const DynamicGraph& graph, const EpidemicParams& params);

// Random certificate matrices -------------------------------------------------

enum class SamplerKind { M1, M2, M3, M4 };

/// M1 = -D + sum_{i != j} beta_i h_ij E_ij            (h per ordered pair)
/// M2 = -D + sum_{i<j} sqrt(beta_i beta_j) h_ij (E_ij + E_ji)
/// M3 = sum_{i<j} h_ij (E_ij + E_ji)
/// M4 = I - D + sum_{i<j} sqrt(beta_i beta_j) h_ij (E_ij + E_ji)
/// with h_ij ~ Bernoulli(means(i,j)).
struct RandomMatrixSampler {
  SamplerKind which;
  Matrix means;
  Vector beta;
  Vector delta;

  int size() const { return static_cast<int>(means.rows()); }
  /// Pairs carrying randomness (0 < mean < 1): ordered for M1, i<j otherwise.
  std::vector<std::pair<int, int>> random_pairs() const;
};

Matrix sample_certificate_matrix(const RandomMatrixSampler& sampler, std::uint64_t seed);
/// The matrix for a given realisation, h(i,j) in {0,1}.
Matrix certificate_matrix(const RandomMatrixSampler& sampler, const Matrix& h);
Matrix expected_certificate_matrix(const RandomMatrixSampler& sampler);
/// mu for M1, eta for M2 and M3, log eta for M4.
double certificate_statistic(SamplerKind which, const Matrix& m);

enum class ExpectationMode { Exhaustive, MonteCarlo };

struct CertificateEstimate {
  double mean;
  double standard_error;
  std::size_t samples;
};

inline constexpr std::size_t kMaxExhaustiveConfigurations = std::size_t{1} << 20;

/// Exhaustive mode walks the 2^r realisations in Gray-code order; throws
/// TooManyConfigurations above kMaxExhaustiveConfigurations.
CertificateEstimate expected_certificate(const RandomMatrixSampler& sampler, ExpectationMode mode,
                                         std::size_t draws = 0, std::uint64_t seed = 0);

struct ChungPoint {
  double s;
  double empirical;
  double bound;
  double standard_error;  // binomial SE at the bound

  bool within_bound(double z = 3.0) const { return empirical <= bound + z * standard_error; }
};

/// Frequency of eta(X) > eta(E X) + s over `draws` samples next to the bound
/// kappa_{C, v^2}(s). X = M1 + M1^T for M1, the sampled matrix otherwise.
std::vector<ChungPoint> chung_tail_check(const RandomMatrixSampler& sampler, std::span<const double> s_grid,
                                         std::size_t draws, std::uint64_t seed);
/// (C, v^2) used by the tail check.
std::pair<double, double> chung_constants(const RandomMatrixSampler& sampler);

namespace reference {
// Straight serial loops over the same per-draw seeds.
CertificateEstimate expected_certificate_mc(const RandomMatrixSampler& sampler, std::size_t draws,
                                            std::uint64_t seed);
/// Plain enumeration of all 2^r realisations, recomputing every weight.
double expected_certificate_exhaustive(const RandomMatrixSampler& sampler);
std::vector<ChungPoint> chung_tail_check(const RandomMatrixSampler& sampler, std::span<const double> s_grid,
                                         std::size_t draws, std::uint64_t seed);
void kronecker_apply(const SubgraphEnumeration& sub, const EpidemicParams& params, std::span<const double> x,
                     std::span<double> y);
}  // namespace reference

}  // namespace tempest
