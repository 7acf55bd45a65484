#include "tempest/oracle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include <omp.h>

#include "tempest/errors.hpp"
#include "tempest/rng.hpp"

namespace tempest {

// Subgraphs -------------------------------------------------------------------

Matrix SubgraphEnumeration::f(std::size_t label) const {
  Matrix out = base;
  for (int k = 0; k < m; ++k) {
    if (!((label >> k) & 1U)) continue;
    const auto [i, j] = pairs[static_cast<std::size_t>(k)];
    out(i, j) = 1.0;
    if (kind == GraphKind::Amei) out(j, i) = 1.0;
  }
  return out;
}

SubgraphEnumeration enumerate_subgraphs(const DynamicGraph& graph) {
  if (graph.time() != TimeKind::Continuous) throw WrongKind("the Kronecker-sum condition is continuous-time");
  SubgraphEnumeration sub;
  sub.n = graph.size();
  sub.kind = graph.kind();
  sub.base = Matrix::Zero(sub.n, sub.n);
  for (const Edge& e : graph.edges()) {
    const EdgeProcess& p = e.process;
    if (p.is_static()) {
      if (p.output(0) == 1) {
        sub.base(e.i, e.j) = 1.0;
        if (sub.kind == GraphKind::Amei) sub.base(e.j, e.i) = 1.0;
      }
      continue;
    }
    if (p.chain().size() != 2 || p.output(0) == p.output(1))
      throw NonMarkovEdge("edge (" + std::to_string(e.i) + "," + std::to_string(e.j) +
                          ") is not a two-state Markov edge");
    const std::size_t off = p.output(0) == 0 ? 0 : 1;
    const std::size_t on = 1 - off;
    sub.pairs.emplace_back(e.i, e.j);
    sub.u.push_back(p.chain().dynamics()(static_cast<Eigen::Index>(off), static_cast<Eigen::Index>(on)));
    sub.v.push_back(p.chain().dynamics()(static_cast<Eigen::Index>(on), static_cast<Eigen::Index>(off)));
  }
  sub.m = static_cast<int>(sub.pairs.size());
  if (sub.m > kMaxOracleEdges)
    throw TooManyEdges(std::to_string(sub.m) + " dynamic edges exceed the cap of " + std::to_string(kMaxOracleEdges));
  return sub;
}

DynamicGraph random_markov_graph(int n, int m, GraphKind kind, std::uint64_t seed, double rate_lo,
                                 double rate_hi) {
  std::vector<std::pair<int, int>> pool;
  for (int i = 0; i < n; ++i)
    for (int j = kind == GraphKind::Amei ? i + 1 : 0; j < n; ++j)
      if (i != j) pool.emplace_back(i, j);
  if (m < 0 || static_cast<std::size_t>(m) > pool.size()) throw ParamRange("too many edges for the node count");
  Engine engine = make_engine(seed, {tag("random-graph")});
  std::shuffle(pool.begin(), pool.end(), engine);
  std::uniform_real_distribution<double> rate(rate_lo, rate_hi);
  DynamicGraph g(n, kind, TimeKind::Continuous);
  for (int k = 0; k < m; ++k) {
    const double q = rate(engine);
    const double r = rate(engine);
    g.add_edge(pool[static_cast<std::size_t>(k)].first, pool[static_cast<std::size_t>(k)].second,
               build_edge_markovian(q, r));
  }
  return g;
}

Matrix pi_matrix(const SubgraphEnumeration& sub) {
  const auto size = static_cast<Eigen::Index>(sub.labels());
  Matrix pi = Matrix::Zero(size, size);
  for (Eigen::Index l = 0; l < size; ++l) {
    for (int k = 0; k < sub.m; ++k) {
      const Eigen::Index other = l ^ (Eigen::Index{1} << k);
      const bool present = (l >> k) & 1;
      const double rate = present ? sub.v[static_cast<std::size_t>(k)] : sub.u[static_cast<std::size_t>(k)];
      pi(l, other) = rate;
      pi(l, l) -= rate;
    }
  }
  return pi;
}

// Kronecker sum ---------------------------------------------------------------

KroneckerSumOperator::KroneckerSumOperator(const SubgraphEnumeration& sub, const EpidemicParams& params)
    : sub_(sub), params_(params) {
  params.validate(sub.n, TimeKind::Continuous);
  base_rows_.resize(static_cast<std::size_t>(sub.n));
  for (int i = 0; i < sub.n; ++i)
    for (int j = 0; j < sub.n; ++j)
      if (sub.base(i, j) != 0.0) base_rows_[static_cast<std::size_t>(i)].emplace_back(j, params.beta[i]);
  edge_arcs_.resize(static_cast<std::size_t>(sub.m));
  for (int k = 0; k < sub.m; ++k) {
    const auto [i, j] = sub.pairs[static_cast<std::size_t>(k)];
    edge_arcs_[static_cast<std::size_t>(k)].emplace_back(i, j);
    if (sub.kind == GraphKind::Amei) edge_arcs_[static_cast<std::size_t>(k)].emplace_back(j, i);
  }
}

void KroneckerSumOperator::apply_block(std::size_t label, std::span<const double> x, std::span<double> y) const {
  const auto n = static_cast<std::size_t>(sub_.n);
  const double* xl = x.data() + label * n;
  double* yl = y.data() + label * n;
  for (std::size_t i = 0; i < n; ++i) {
    double acc = -params_.delta[static_cast<Eigen::Index>(i)] * xl[i];
    for (const auto& [j, b] : base_rows_[i]) acc += b * xl[j];
    yl[i] = acc;
  }
  for (int k = 0; k < sub_.m; ++k) {
    const bool present = (label >> k) & 1U;
    const double rate = present ? sub_.v[static_cast<std::size_t>(k)] : sub_.u[static_cast<std::size_t>(k)];
    const double* xo = x.data() + (label ^ (std::size_t{1} << k)) * n;
    for (std::size_t i = 0; i < n; ++i) yl[i] += rate * (xo[i] - xl[i]);
    if (present)
      for (const auto& [r, c] : edge_arcs_[static_cast<std::size_t>(k)]) yl[r] += params_.beta[r] * xl[c];
  }
}

void KroneckerSumOperator::apply(std::span<const double> x, std::span<double> y) const {
  const auto blocks = static_cast<std::int64_t>(sub_.labels());
#pragma omp parallel for schedule(static)
  for (std::int64_t l = 0; l < blocks; ++l) apply_block(static_cast<std::size_t>(l), x, y);
}

double KroneckerSumOperator::max_abs_diagonal() const {
  double out_rate = 0.0;
  for (int k = 0; k < sub_.m; ++k)
    out_rate += std::max(sub_.u[static_cast<std::size_t>(k)], sub_.v[static_cast<std::size_t>(k)]);
  return out_rate + params_.delta.maxCoeff();
}

double KroneckerSumOperator::max_offdiagonal_row_sum() const {
  double out_rate = 0.0;
  for (int k = 0; k < sub_.m; ++k)
    out_rate += std::max(sub_.u[static_cast<std::size_t>(k)], sub_.v[static_cast<std::size_t>(k)]);
  const Matrix full = sub_.f(sub_.labels() - 1);
  return out_rate + (params_.beta.asDiagonal() * full).rowwise().sum().maxCoeff();
}

Matrix assemble_kronecker_sum(const SubgraphEnumeration& sub, const EpidemicParams& params) {
  const Eigen::Index n = sub.n;
  const auto labels = static_cast<Eigen::Index>(sub.labels());
  const Matrix pi = pi_matrix(sub);
  Matrix out = Matrix::Zero(n * labels, n * labels);
  for (Eigen::Index a = 0; a < labels; ++a)
    for (Eigen::Index b = 0; b < labels; ++b)
      if (pi(a, b) != 0.0) out.block(a * n, b * n, n, n).diagonal().array() += pi(a, b);
  const Matrix d = params.delta.asDiagonal();
  for (Eigen::Index l = 0; l < labels; ++l)
    out.block(l * n, l * n, n, n) += params.beta.asDiagonal() * sub.f(static_cast<std::size_t>(l)) - d;
  return out;
}

ExponentialVerdict exponential_condition(const DynamicGraph& graph, const EpidemicParams& params) {
  const SubgraphEnumeration sub = enumerate_subgraphs(graph);
  const std::size_t dim = sub.labels() * static_cast<std::size_t>(sub.n);
  if (dim > kMaxOracleDimension)
    throw TooManyEdges("Kronecker-sum dimension " + std::to_string(dim) + " exceeds " +
                       std::to_string(kMaxOracleDimension));
  const KroneckerSumOperator op(sub, params);
  double eta;
  try {
    eta = perron_abscissa(op).value;
  } catch (const ConvergenceFailure&) {
    if (dim > 64) throw;
    eta = dense_spectral_abscissa(assemble_kronecker_sum(sub, params));
  }
  return {eta < 0.0, eta, dim};
}

// Random certificate matrices -------------------------------------------------

std::vector<std::pair<int, int>> RandomMatrixSampler::random_pairs() const {
  std::vector<std::pair<int, int>> out;
  const int n = size();
  for (int i = 0; i < n; ++i)
    for (int j = which == SamplerKind::M1 ? 0 : i + 1; j < n; ++j) {
      if (i == j) continue;
      const double p = means(i, j);
      if (p > 0.0 && p < 1.0) out.emplace_back(i, j);
    }
  return out;
}

Matrix certificate_matrix(const RandomMatrixSampler& s, const Matrix& h) {
  const int n = s.size();
  Matrix m = Matrix::Zero(n, n);
  switch (s.which) {
    case SamplerKind::M1:
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          if (i != j) m(i, j) = s.beta[i] * h(i, j);
      m.diagonal() -= s.delta;
      break;
    case SamplerKind::M2:
    case SamplerKind::M3:
    case SamplerKind::M4:
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
          const double w = s.which == SamplerKind::M3 ? 1.0 : std::sqrt(s.beta[i] * s.beta[j]);
          m(i, j) = m(j, i) = w * h(i, j);
        }
      if (s.which == SamplerKind::M2) m.diagonal() -= s.delta;
      if (s.which == SamplerKind::M4) m.diagonal() += Vector::Ones(n) - s.delta;
      break;
  }
  return m;
}

namespace {

// Deterministic part of h: 1 where the mean is 1, 0 elsewhere.
Matrix fixed_h(const RandomMatrixSampler& s) { return (s.means.array() >= 1.0).cast<double>().matrix(); }

Matrix draw_h(const RandomMatrixSampler& s, const std::vector<std::pair<int, int>>& pairs, std::uint64_t seed) {
  Matrix h = fixed_h(s);
  for (const auto& [i, j] : pairs) {
    const double u = counter_uniform(seed, pair_key(i, j));
    h(i, j) = u < s.means(i, j) ? 1.0 : 0.0;
  }
  return h;
}

std::uint64_t draw_seed(std::uint64_t seed, std::size_t d) { return derive_seed(seed, {tag("draw"), d}); }

CertificateEstimate summarize(const std::vector<double>& values) {
  // A constant sample is reported exactly, without summation round-off.
  if (std::all_of(values.begin(), values.end(), [&](double v) { return v == values.front(); }))
    return {values.front(), 0.0, values.size()};
  const auto n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double se = values.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
  return {mean, se, values.size()};
}

void check_sampler(const RandomMatrixSampler& s) {
  const int n = s.size();
  if (s.means.cols() != n || s.beta.size() != n || s.delta.size() != n)
    throw ParamRange("sampler dimensions do not match");
  if ((s.means.array() < 0.0).any() || (s.means.array() > 1.0).any()) throw ParamRange("means must lie in [0,1]");
}

double eta_of_sample(const RandomMatrixSampler& s, const Matrix& m) {
  return s.which == SamplerKind::M1 ? symmetric_max_eigenvalue(m + m.transpose()) : symmetric_max_eigenvalue(m);
}

double binomial_se(double bound, std::size_t draws) {
  const double b = std::min(1.0, bound);
  return std::sqrt(b * (1.0 - b) / static_cast<double>(draws));
}

}  // namespace

Matrix sample_certificate_matrix(const RandomMatrixSampler& s, std::uint64_t seed) {
  check_sampler(s);
  return certificate_matrix(s, draw_h(s, s.random_pairs(), seed));
}

Matrix expected_certificate_matrix(const RandomMatrixSampler& s) {
  check_sampler(s);
  Matrix h = s.means;
  if (s.which != SamplerKind::M1) h = h.triangularView<Eigen::StrictlyUpper>();
  return certificate_matrix(s, h);
}

double certificate_statistic(SamplerKind which, const Matrix& m) {
  switch (which) {
    case SamplerKind::M1: return matrix_measure(m);
    case SamplerKind::M2:
    case SamplerKind::M3: return symmetric_max_eigenvalue(m);
    case SamplerKind::M4: return std::log(symmetric_max_eigenvalue(m));
  }
  return 0.0;
}

CertificateEstimate expected_certificate(const RandomMatrixSampler& s, ExpectationMode mode, std::size_t draws,
                                         std::uint64_t seed) {
  check_sampler(s);
  const auto pairs = s.random_pairs();
  if (mode == ExpectationMode::MonteCarlo) {
    if (draws == 0) throw ParamRange("Monte-Carlo mode needs draws > 0");
    std::vector<double> values(draws);
#pragma omp parallel for schedule(dynamic, 64)
    for (std::int64_t d = 0; d < static_cast<std::int64_t>(draws); ++d) {
      const Matrix h = draw_h(s, pairs, draw_seed(seed, static_cast<std::size_t>(d)));
      values[static_cast<std::size_t>(d)] = certificate_statistic(s.which, certificate_matrix(s, h));
    }
    return summarize(values);
  }

  if (pairs.size() > 20 || (std::size_t{1} << pairs.size()) > kMaxExhaustiveConfigurations)
    throw TooManyConfigurations(std::to_string(pairs.size()) + " random entries give too many configurations");
  // Gray-code walk: each step flips one entry of h and updates the weight.
  Matrix h = fixed_h(s);
  double log_w = 0.0;
  for (const auto& [i, j] : pairs) log_w += std::log1p(-s.means(i, j));
  const std::size_t total = std::size_t{1} << pairs.size();
  double acc = 0.0;
  // Kahan compensation keeps the weighted sum exact to rounding.
  double comp = 0.0;
  for (std::size_t step = 0; step < total; ++step) {
    if (step > 0) {
      const auto k = static_cast<std::size_t>(std::countr_zero(step));
      const auto [i, j] = pairs[k];
      const double p = s.means(i, j);
      const double odds = std::log(p) - std::log1p(-p);
      if (h(i, j) == 0.0) {
        h(i, j) = 1.0;
        log_w += odds;
      } else {
        h(i, j) = 0.0;
        log_w -= odds;
      }
    }
    const double term = std::exp(log_w) * certificate_statistic(s.which, certificate_matrix(s, h)) - comp;
    const double next = acc + term;
    comp = (next - acc) - term;
    acc = next;
  }
  return {acc, 0.0, total};
}

std::pair<double, double> chung_constants(const RandomMatrixSampler& s) {
  const Matrix& a = s.means;
  switch (s.which) {
    case SamplerKind::M1: return {s.beta.maxCoeff(), delta1(a, s.beta)};
    case SamplerKind::M3: return {1.0, delta3(a)};
    case SamplerKind::M2:
    case SamplerKind::M4: return {s.beta.maxCoeff(), delta2(a, s.beta)};
  }
  return {1.0, 0.0};
}

std::vector<ChungPoint> chung_tail_check(const RandomMatrixSampler& s, std::span<const double> s_grid,
                                         std::size_t draws, std::uint64_t seed) {
  check_sampler(s);
  if (draws == 0) throw ParamRange("tail check needs draws > 0");
  const auto pairs = s.random_pairs();
  const double centre = eta_of_sample(s, expected_certificate_matrix(s));
  std::vector<double> eta(draws);
#pragma omp parallel for schedule(dynamic, 64)
  for (std::int64_t d = 0; d < static_cast<std::int64_t>(draws); ++d) {
    const Matrix h = draw_h(s, pairs, draw_seed(seed, static_cast<std::size_t>(d)));
    eta[static_cast<std::size_t>(d)] = eta_of_sample(s, certificate_matrix(s, h));
  }
  const auto [c, v2] = chung_constants(s);
  std::vector<ChungPoint> out;
  for (double sv : s_grid) {
    std::size_t hits = 0;
    for (double e : eta) hits += e > centre + sv ? 1 : 0;
    const double bound = v2 > 0.0 ? kappa({c, v2, s.size()}, sv) : (sv > 0.0 ? 0.0 : s.size());
    out.push_back({sv, static_cast<double>(hits) / static_cast<double>(draws), bound, binomial_se(bound, draws)});
  }
  return out;
}

namespace reference {

CertificateEstimate expected_certificate_mc(const RandomMatrixSampler& s, std::size_t draws, std::uint64_t seed) {
  const auto pairs = s.random_pairs();
  std::vector<double> values;
  for (std::size_t d = 0; d < draws; ++d)
    values.push_back(certificate_statistic(s.which, certificate_matrix(s, draw_h(s, pairs, draw_seed(seed, d)))));
  return summarize(values);
}

double expected_certificate_exhaustive(const RandomMatrixSampler& s) {
  const auto pairs = s.random_pairs();
  double acc = 0.0;
  for (std::size_t mask = 0; mask < (std::size_t{1} << pairs.size()); ++mask) {
    Matrix h = fixed_h(s);
    double w = 1.0;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const auto [i, j] = pairs[k];
      const bool on = (mask >> k) & 1U;
      h(i, j) = on ? 1.0 : 0.0;
      w *= on ? s.means(i, j) : 1.0 - s.means(i, j);
    }
    acc += w * certificate_statistic(s.which, certificate_matrix(s, h));
  }
  return acc;
}

std::vector<ChungPoint> chung_tail_check(const RandomMatrixSampler& s, std::span<const double> s_grid,
                                         std::size_t draws, std::uint64_t seed) {
  const auto pairs = s.random_pairs();
  const double centre = eta_of_sample(s, expected_certificate_matrix(s));
  const auto [c, v2] = chung_constants(s);
  std::vector<std::size_t> hits(s_grid.size(), 0);
  for (std::size_t d = 0; d < draws; ++d) {
    const double e = eta_of_sample(s, certificate_matrix(s, draw_h(s, pairs, draw_seed(seed, d))));
    for (std::size_t k = 0; k < s_grid.size(); ++k) hits[k] += e > centre + s_grid[k] ? 1 : 0;
  }
  std::vector<ChungPoint> out;
  for (std::size_t k = 0; k < s_grid.size(); ++k) {
    const double bound = v2 > 0.0 ? kappa({c, v2, s.size()}, s_grid[k]) : (s_grid[k] > 0.0 ? 0.0 : s.size());
    out.push_back({s_grid[k], static_cast<double>(hits[k]) / static_cast<double>(draws), bound,
                   binomial_se(bound, draws)});
  }
  return out;
}

void kronecker_apply(const SubgraphEnumeration& sub, const EpidemicParams& params, std::span<const double> x,
                     std::span<double> y) {
  const Eigen::Index n = sub.n;
  const Matrix pi = pi_matrix(sub);
  Eigen::Map<const Matrix> xm(x.data(), n, static_cast<Eigen::Index>(sub.labels()));
  Eigen::Map<Matrix> ym(y.data(), n, static_cast<Eigen::Index>(sub.labels()));
  // Column l of xm is block l; (Pi (x) I) x has block l = sum_l' Pi(l,l') x_l'.
  ym = xm * pi.transpose();
  for (std::size_t l = 0; l < sub.labels(); ++l) {
    const auto c = static_cast<Eigen::Index>(l);
    ym.col(c) += (params.beta.asDiagonal() * sub.f(l)) * xm.col(c) - params.delta.cwiseProduct(xm.col(c));
  }
}

}  // namespace reference

}  // namespace tempest
