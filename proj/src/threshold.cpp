#include "tempest/threshold.hpp"

#include <cmath>
#include <limits>

#include "tempest/errors.hpp"

namespace tempest {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// eta(B A + diag(shift)). Symmetric A goes through B^{1/2} A B^{1/2}, which is
// similar to B A and symmetric.
double eta_scaled(const Matrix& a, const Vector& beta, const Vector& shift) {
  if (is_symmetric(a)) {
    const Vector root = beta.cwiseSqrt();
    Matrix m = root.asDiagonal() * a * root.asDiagonal();
    m.diagonal() += shift;
    // Round-off in the two products can break exact symmetry.
    m = 0.5 * (m + m.transpose()).eval();
    return symmetric_max_eigenvalue(m);
  }
  Matrix m = beta.asDiagonal() * a;
  m.diagonal() += shift;
  return spectral_abscissa(m);
}

double mu_scaled(const Matrix& a, const Vector& beta, const Vector& shift) {
  Matrix m = beta.asDiagonal() * a;
  m.diagonal() += shift;
  return matrix_measure(m);
}

Matrix support(const Matrix& a) { return (a.array() > 0.0).cast<double>().matrix(); }

void check_mean(const MeanMatrix& mean, const EpidemicParams& params, GraphKind kind, TimeKind time) {
  if (mean.kind != kind)
    throw WrongKind(kind == GraphKind::Amei ? "certificate needs an AMEI graph" : "certificate needs an AMAI graph");
  params.validate(mean.size(), time);
}

MeanMatrix checked_mean(const DynamicGraph& graph, GraphKind kind, TimeKind time, bool need_aperiodic) {
  if (graph.kind() != kind)
    throw WrongKind(kind == GraphKind::Amei ? "certificate needs an AMEI graph" : "certificate needs an AMAI graph");
  if (graph.time() != time)
    throw WrongKind(time == TimeKind::Continuous ? "certificate needs a continuous-time graph"
                                                 : "certificate needs a discrete-time graph");
  for (const Edge& e : graph.edges()) {
    const std::string where = "edge (" + std::to_string(e.i) + "," + std::to_string(e.j) + ")";
    if (!e.process.chain().is_irreducible()) throw NonIrreducible(where + " has a reducible chain");
    if (need_aperiodic && !e.process.chain().is_aperiodic()) throw NonIrreducible(where + " has a periodic chain");
  }
  return mean_matrix(graph);
}

ThresholdReport static_reduction(Certificate theorem, double lhs, double threshold, double decay) {
  ThresholdReport r;
  r.theorem = theorem;
  r.certificate = theorem == Certificate::T4 ? Certificate::StaticDt : Certificate::StaticCt;
  r.lhs = lhs;
  r.threshold = threshold;
  r.stable = lhs < threshold;
  if (r.stable) r.decay_rate_bound = decay;
  r.notes.push_back("deterministic graph: reduced to the static condition");
  return r;
}

void finish(ThresholdReport& r) {
  r.intermediates["s_star"] = r.s_star;
  if (r.decay_rate_bound) r.intermediates["decay_bound"] = *r.decay_rate_bound;
}

}  // namespace

// Params ----------------------------------------------------------------------

EpidemicParams EpidemicParams::homogeneous(int n, double beta, double delta) {
  return {Vector::Constant(n, beta), Vector::Constant(n, delta)};
}

bool EpidemicParams::is_homogeneous() const {
  return size() > 0 && (beta.array() == beta[0]).all() && (delta.array() == delta[0]).all();
}

void EpidemicParams::validate(int n, TimeKind time) const {
  if (beta.size() != n || delta.size() != n)
    throw ParamRange("rate vectors must have length " + std::to_string(n));
  if (!(beta.array() > 0.0).all() || !(delta.array() > 0.0).all()) throw ParamRange("rates must be positive");
  if (!beta.allFinite() || !delta.allFinite()) throw ParamRange("rates must be finite");
  if (time == TimeKind::Discrete && ((beta.array() > 1.0).any() || (delta.array() > 1.0).any()))
    throw ParamRange("discrete-time probabilities must lie in (0, 1]");
}

std::string to_string(Certificate c) {
  switch (c) {
    case Certificate::T1: return "T1";
    case Certificate::T2: return "T2";
    case Certificate::T3: return "T3";
    case Certificate::T4: return "T4";
    case Certificate::StaticCt: return "STATIC_CT";
    case Certificate::StaticDt: return "STATIC_DT";
    case Certificate::SupportTrivial: return "SUPPORT_TRIVIAL";
  }
  return "?";
}

Certificate certificate_from_string(const std::string& name) {
  std::string s;
  for (char ch : name) s += static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  for (auto c : {Certificate::T1, Certificate::T2, Certificate::T3, Certificate::T4, Certificate::StaticCt,
                 Certificate::StaticDt, Certificate::SupportTrivial})
    if (to_string(c) == s) return c;
  throw ConfigError("unknown certificate '" + name + "'");
}

double ThresholdReport::at(const std::string& key) const {
  auto it = intermediates.find(key);
  if (it == intermediates.end()) throw std::out_of_range("no intermediate named " + key);
  return it->second;
}

nlohmann::json to_json(const ThresholdReport& r) {
  auto num = [](double v) -> nlohmann::json {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
  };
  nlohmann::json j;
  j["theorem"] = to_string(r.theorem);
  j["certificate"] = to_string(r.certificate);
  j["lhs"] = num(r.lhs);
  j["threshold"] = num(r.threshold);
  j["s_star"] = num(r.s_star);
  j["stable"] = r.stable;
  j["decay_bound"] = r.decay_rate_bound ? num(*r.decay_rate_bound) : nlohmann::json(nullptr);
  nlohmann::json inter = nlohmann::json::object();
  for (const auto& [k, v] : r.intermediates) inter[k] = num(v);
  j["intermediates"] = inter;
  j["notes"] = r.notes;
  return j;
}

// Delta -----------------------------------------------------------------------

double delta1(const Matrix& a, const Vector& beta) {
  const Matrix var = a.cwiseProduct((Matrix::Ones(a.rows(), a.cols()) - a));
  const Vector b2 = beta.cwiseAbs2();
  double best = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < a.cols(); ++j) s += b2[i] * var(i, j) + b2[j] * var(j, i);
    best = std::max(best, s);
  }
  return best;
}

double delta2(const Matrix& a, const Vector& beta) {
  double best = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < a.cols(); ++j) s += beta[i] * beta[j] * a(i, j) * (1.0 - a(i, j));
    best = std::max(best, s);
  }
  return best;
}

double delta3(const Matrix& a) {
  return a.cwiseProduct(Matrix::Ones(a.rows(), a.cols()) - a).rowwise().sum().maxCoeff();
}

// Static ----------------------------------------------------------------------

StaticVerdict static_ct_condition(const Matrix& a, const EpidemicParams& params) {
  params.validate(static_cast<int>(a.rows()), TimeKind::Continuous);
  if (params.is_homogeneous()) {
    const double eta = a.size() ? spectral_abscissa(a) : 0.0;
    const double lhs = params.beta[0] / params.delta[0];
    const double thr = eta > 0.0 ? 1.0 / eta : kInf;
    return {lhs < thr, thr - lhs, lhs, thr};
  }
  const double lhs = eta_scaled(a, params.beta, -params.delta);
  return {lhs < 0.0, -lhs, lhs, 0.0};
}

StaticVerdict static_dt_condition(const Matrix& a, const EpidemicParams& params) {
  params.validate(static_cast<int>(a.rows()), TimeKind::Discrete);
  const double lhs = eta_scaled(a, params.beta, Vector::Ones(a.rows()) - params.delta);
  return {lhs < 1.0, 1.0 - lhs, lhs, 1.0};
}

ThresholdReport certify_static_ct(const Matrix& a, const EpidemicParams& params) {
  const StaticVerdict v = static_ct_condition(a, params);
  ThresholdReport r;
  r.theorem = r.certificate = Certificate::StaticCt;
  r.lhs = v.lhs;
  r.threshold = v.threshold;
  r.stable = v.stable;
  const double growth = eta_scaled(a, params.beta, -params.delta);
  r.intermediates["eta_BA_minus_D"] = growth;
  r.intermediates["margin"] = v.margin;
  if (r.stable) r.decay_rate_bound = -growth;
  finish(r);
  return r;
}

ThresholdReport certify_static_dt(const Matrix& a, const EpidemicParams& params) {
  const StaticVerdict v = static_dt_condition(a, params);
  ThresholdReport r;
  r.theorem = r.certificate = Certificate::StaticDt;
  r.lhs = v.lhs;
  r.threshold = v.threshold;
  r.stable = v.stable;
  r.intermediates["lambda4"] = v.lhs;
  r.intermediates["margin"] = v.margin;
  if (r.stable) r.decay_rate_bound = -std::log(v.lhs);
  finish(r);
  return r;
}

// T1 certificate ------------------------------------------------------------

ThresholdReport certify_amai_ct(const MeanMatrix& mean, const EpidemicParams& params) {
  check_mean(mean, params, GraphKind::Amai, TimeKind::Continuous);
  const Matrix& a = mean.values;
  const int n = mean.size();
  const Vector& beta = params.beta;
  const double d1 = delta1(a, beta);
  const double lambda1 = mu_scaled(a, beta, -params.delta);

  if (d1 == 0.0) {
    const double eta = eta_scaled(a, beta, -params.delta);
    ThresholdReport r = static_reduction(Certificate::T1, eta, 0.0, -eta);
    r.intermediates = {{"Delta1", 0.0}, {"lambda1", lambda1}};
    finish(r);
    return r;
  }

  const KappaParams kp{params.b_bar(), d1, n};
  const double k0 = kappa_inv_at_one(kp);
  const double mu_support = mu_scaled(support(a), beta, -params.delta);
  const double c1 = mu_support - k0 / 2.0;
  const double sbar1 = 2.0 * params.delta_min() + 2.0 * c_minus(c1);

  ThresholdReport r;
  r.theorem = r.certificate = Certificate::T1;
  r.lhs = lambda1;
  r.intermediates = {{"Delta1", d1}, {"c1", c1}, {"sbar1", sbar1}, {"kappa_inv_1", k0},
                     {"lambda1", lambda1}, {"mu_support", mu_support}, {"b_bar", kp.b}};

  if (mu_support < 0.0) {
    // The objective tends to +inf at kappa^{-1}(1); the support bound alone is stable.
    r.certificate = Certificate::SupportTrivial;
    r.threshold = kInf;
    r.s_star = k0;
    r.stable = true;
    r.decay_rate_bound = -mu_support;
    r.notes.push_back("objective diverges at the left endpoint; support matrix already stable");
    r.intermediates["tau_A"] = kInf;
    finish(r);
    return r;
  }
  if (!(sbar1 > k0)) {
    r.threshold = -kInf;
    r.stable = false;
    r.notes.push_back("interval_empty");
    r.intermediates["tau_A"] = -kInf;
    finish(r);
    return r;
  }
  auto objective = [&](double s) {
    const double k = kappa(kp, s);
    return -(s + 2.0 * c1 * k) / (2.0 * (1.0 - k));
  };
  const ScalarMaximizeResult m = maximize_on_interval(objective, k0, sbar1);
  r.threshold = m.value;
  r.s_star = m.s_star;
  r.intermediates["tau_A"] = m.value;
  r.stable = lambda1 < m.value;
  if (r.stable) {
    const double k = kappa(kp, m.s_star);
    r.decay_rate_bound = -lambda1 * (1.0 - k) - m.s_star / 2.0 - c1 * k;
  }
  finish(r);
  return r;
}

ThresholdReport certify_amai_ct(const DynamicGraph& graph, const EpidemicParams& params) {
  return certify_amai_ct(checked_mean(graph, GraphKind::Amai, TimeKind::Continuous, false), params);
}

// T2 certificate ------------------------------------------------------------

ThresholdReport certify_amei_ct(const MeanMatrix& mean, const EpidemicParams& params) {
  check_mean(mean, params, GraphKind::Amei, TimeKind::Continuous);
  const Matrix& a = mean.values;
  const int n = mean.size();
  const Vector& beta = params.beta;
  const double d2 = delta2(a, beta);
  const double lambda2 = eta_scaled(a, beta, -params.delta);

  if (d2 == 0.0) {
    ThresholdReport r = static_reduction(Certificate::T2, lambda2, 0.0, -lambda2);
    r.intermediates = {{"Delta2", 0.0}, {"lambda2", lambda2}};
    finish(r);
    return r;
  }

  const KappaParams kp{params.b_bar(), d2, n};
  const double k0 = kappa_inv_at_one(kp);
  const double eta_support = eta_scaled(support(a), beta, -params.delta);
  const double c2 = eta_support - k0;
  const double sbar2 = params.delta_min() + c_minus(c2);

  ThresholdReport r;
  r.theorem = r.certificate = Certificate::T2;
  r.lhs = lambda2;
  r.intermediates = {{"Delta2", d2}, {"c2", c2}, {"sbar2", sbar2}, {"kappa_inv_2", k0},
                     {"lambda2", lambda2}, {"eta_support", eta_support}, {"b_bar", kp.b}};

  if (eta_support < 0.0) {
    r.certificate = Certificate::SupportTrivial;
    r.threshold = kInf;
    r.s_star = k0;
    r.stable = true;
    r.decay_rate_bound = -eta_support;
    r.notes.push_back("objective diverges at the left endpoint; support matrix already stable");
    r.intermediates["tau_E"] = kInf;
    finish(r);
    return r;
  }
  if (!(sbar2 > k0)) {
    r.threshold = -kInf;
    r.stable = false;
    r.notes.push_back("interval_empty");
    r.intermediates["tau_E"] = -kInf;
    finish(r);
    return r;
  }
  auto objective = [&](double s) {
    const double k = kappa(kp, s);
    return -(s + c2 * k) / (1.0 - k);
  };
  const ScalarMaximizeResult m = maximize_on_interval(objective, k0, sbar2);
  r.threshold = m.value;
  r.s_star = m.s_star;
  r.intermediates["tau_E"] = m.value;
  r.stable = lambda2 < m.value;
  if (r.stable) {
    const double k = kappa(kp, m.s_star);
    r.decay_rate_bound = -lambda2 * (1.0 - k) - m.s_star - c2 * k;
  }
  finish(r);
  return r;
}

ThresholdReport certify_amei_ct(const DynamicGraph& graph, const EpidemicParams& params) {
  return certify_amei_ct(checked_mean(graph, GraphKind::Amei, TimeKind::Continuous, false), params);
}

// T3 certificate ------------------------------------------------------------

XiResult xi_h(int n, double eta_support, double d3, double delta_over_beta) {
  if (!(d3 > 0.0)) throw DomainError("xi_H needs Delta3 > 0");
  const KappaParams kp{1.0, d3, n};
  const double k0 = kappa_inv_at_one(kp);
  const double c3 = eta_support - k0;
  const double sbar3 = delta_over_beta + c_minus(c3);
  XiResult out{kInf, k0, k0, c3, sbar3, false};
  // Numerator at the left endpoint is 1 - (beta/delta) eta(sgn A).
  if (delta_over_beta > eta_support) {
    out.trivial = true;
    return out;
  }
  if (!(sbar3 > k0)) {
    out.xi = -kInf;
    return out;
  }
  const double ratio = 1.0 / delta_over_beta;
  auto objective = [&](double s) {
    const double k = kappa(kp, s);
    return (1.0 - ratio * (s + c3 * k)) / (1.0 - k);
  };
  const ScalarMaximizeResult m = maximize_on_interval(objective, k0, sbar3);
  out.xi = m.value;
  out.s_star = m.s_star;
  return out;
}

ThresholdReport certify_homogeneous(const MeanMatrix& mean, double beta, double delta) {
  const int n = mean.size();
  const EpidemicParams params = EpidemicParams::homogeneous(n, beta, delta);
  check_mean(mean, params, GraphKind::Amei, TimeKind::Continuous);
  const Matrix& a = mean.values;
  const double d3 = delta3(a);
  const double lambda3 = n ? symmetric_max_eigenvalue(a) : 0.0;
  const double ratio = beta / delta;

  if (d3 == 0.0) {
    const double thr = lambda3 > 0.0 ? 1.0 / lambda3 : kInf;
    ThresholdReport r = static_reduction(Certificate::T3, ratio, thr, delta - beta * lambda3);
    r.intermediates = {{"Delta3", 0.0}, {"lambda3", lambda3}};
    finish(r);
    return r;
  }

  const double eta_support = symmetric_max_eigenvalue(support(a));
  const XiResult xi = xi_h(n, eta_support, d3, delta / beta);

  ThresholdReport r;
  r.theorem = r.certificate = Certificate::T3;
  r.lhs = ratio;
  r.s_star = xi.s_star;
  r.intermediates = {{"Delta3", d3},
                     {"c3", xi.c3},
                     {"sbar3", xi.sbar3},
                     {"kappa_inv_3", xi.kappa_inv},
                     {"lambda3", lambda3},
                     {"eta_support", eta_support},
                     {"xi_H", xi.xi},
                     {"trivial_regime", xi.trivial ? 1.0 : 0.0}};

  if (xi.trivial) {
    r.certificate = Certificate::SupportTrivial;
    r.threshold = kInf;
    r.stable = true;
    r.decay_rate_bound = delta - beta * eta_support;
    r.notes.push_back("beta/delta < 1/eta(sgn A): stable by the support bound");
    finish(r);
    return r;
  }
  r.intermediates["xi_H_below_one"] = xi.xi < 1.0 ? 1.0 : 0.0;
  if (!std::isfinite(xi.xi)) {
    r.threshold = -kInf;
    r.stable = false;
    r.notes.push_back("interval_empty");
    finish(r);
    return r;
  }
  r.threshold = xi.xi / lambda3;
  r.stable = ratio < r.threshold;
  if (r.stable) {
    const KappaParams kp{1.0, d3, n};
    const double k = kappa(kp, xi.s_star);
    // The bracket is in units of 1/beta; multiplying by beta gives a rate.
    r.decay_rate_bound = beta * (delta / beta - lambda3 - xi.s_star - (xi.c3 - lambda3) * k);
  }
  finish(r);
  return r;
}

ThresholdReport certify_homogeneous(const DynamicGraph& graph, double beta, double delta) {
  return certify_homogeneous(checked_mean(graph, GraphKind::Amei, TimeKind::Continuous, false), beta, delta);
}

// T4 certificate ------------------------------------------------------------

ThresholdReport certify_amei_dt(const MeanMatrix& mean, const EpidemicParams& params) {
  check_mean(mean, params, GraphKind::Amei, TimeKind::Discrete);
  const Matrix& a = mean.values;
  const int n = mean.size();
  const Vector& beta = params.beta;
  const Vector shift = Vector::Ones(n) - params.delta;
  const double d2 = delta2(a, beta);
  const double lambda4 = eta_scaled(a, beta, shift);

  if (d2 == 0.0) {
    ThresholdReport r = static_reduction(Certificate::T4, lambda4, 1.0, -std::log(lambda4));
    r.intermediates = {{"Delta2", 0.0}, {"lambda4", lambda4}};
    finish(r);
    return r;
  }

  const double eta_max = eta_scaled(support(a), beta, shift);
  const KappaParams kp{params.b_bar(), d2, n};

  ThresholdReport r;
  r.theorem = r.certificate = Certificate::T4;
  r.lhs = lambda4;
  r.intermediates = {{"Delta2", d2}, {"lambda4", lambda4}, {"eta_Mmax", eta_max}, {"b_bar", kp.b}};

  if (!(lambda4 < 1.0)) {
    r.threshold = -kInf;
    r.stable = false;
    r.notes.push_back("interval_empty: lambda4 >= 1");
    r.intermediates["tau_D"] = -kInf;
    finish(r);
    return r;
  }
  const double log_ratio = std::log(lambda4 / eta_max);
  auto objective = [&](double s) { return std::exp(kappa(kp, s) * log_ratio) - s; };
  MaximizeOptions opts;
  opts.include_lo = true;
  const ScalarMaximizeResult m = maximize_on_interval(objective, 0.0, 1.0 - lambda4, opts);
  r.threshold = m.value;
  r.s_star = m.s_star;
  r.intermediates["tau_D"] = m.value;
  r.stable = lambda4 < m.value;
  if (r.stable) {
    const double gamma = -std::log(lambda4 + m.s_star) + kappa(kp, m.s_star) * log_ratio;
    r.decay_rate_bound = gamma;
    r.intermediates["gamma_D"] = gamma;
  }
  finish(r);
  return r;
}

ThresholdReport certify_amei_dt(const DynamicGraph& graph, const EpidemicParams& params) {
  return certify_amei_dt(checked_mean(graph, GraphKind::Amei, TimeKind::Discrete, true), params);
}

// Dispatch --------------------------------------------------------------------

ThresholdReport certify(const MeanMatrix& mean, const EpidemicParams& params, Certificate which) {
  switch (which) {
    case Certificate::T1: return certify_amai_ct(mean, params);
    case Certificate::T2: return certify_amei_ct(mean, params);
    case Certificate::T3:
      if (!params.is_homogeneous()) throw ParamRange("the homogeneous certificate needs scalar rates");
      return certify_homogeneous(mean, params.beta[0], params.delta[0]);
    case Certificate::T4: return certify_amei_dt(mean, params);
    case Certificate::StaticCt: return certify_static_ct(mean.values, params);
    case Certificate::StaticDt: return certify_static_dt(mean.values, params);
    case Certificate::SupportTrivial: break;
  }
  throw ConfigError("SUPPORT_TRIVIAL is an outcome, not a certificate to request");
}

double threshold_in_beta(const MeanMatrix& mean, double delta, Certificate which, double lo, double hi,
                         double tol) {
  if (!(lo > 0.0) || !(hi > lo)) throw BracketError("need 0 < lo < hi");
  auto stable = [&](double beta) {
    return certify(mean, EpidemicParams::homogeneous(mean.size(), beta, delta), which).stable;
  };
  if (stable(hi)) return hi;
  if (!stable(lo))
    throw BracketError("verdict is unstable at both ends of [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  // Bisect well past tol so the midpoint sits strictly inside the band.
  const double width = tol * 1e-2;
  while (hi - lo > width) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (stable(mid) ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double threshold_in_beta(const DynamicGraph& graph, double delta, Certificate which, double lo, double hi,
                         double tol) {
  const bool dt = which == Certificate::T4 || which == Certificate::StaticDt;
  const GraphKind kind = which == Certificate::T1 ? GraphKind::Amai : graph.kind();
  const MeanMatrix mean =
      checked_mean(graph, kind, dt ? TimeKind::Discrete : TimeKind::Continuous, which == Certificate::T4);
  return threshold_in_beta(mean, delta, which, lo, hi, tol);
}

}  // namespace tempest
