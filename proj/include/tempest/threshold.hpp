#pragma once

// Stability certificates for SIS spreading over aggregated-Markovian graphs.
//
// Every certify_* entry point has a graph overload (validates kind, time and
// irreducibility, then builds the mean matrix) and a MeanMatrix overload that
// works directly on a given mean matrix.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tempest/spectral.hpp"
#include "tempest/stochastic_graph.hpp"

namespace tempest {

struct EpidemicParams {
  Vector beta;   // infection rates (CT) or per-contact probabilities (DT)
  Vector delta;  // recovery rates (CT) or probabilities (DT)

  static EpidemicParams homogeneous(int n, double beta, double delta);

  int size() const { return static_cast<int>(beta.size()); }
  double b_bar() const { return beta.maxCoeff(); }
  double delta_min() const { return delta.minCoeff(); }
  bool is_homogeneous() const;

  /// Throws ParamRange: sizes must match n, rates positive, and for discrete
  /// time both vectors must lie in (0, 1].
  void validate(int n, TimeKind time) const;
};

enum class Certificate { T1, T2, T3, T4, StaticCt, StaticDt, SupportTrivial };

std::string to_string(Certificate c);
Certificate certificate_from_string(const std::string& name);

struct ThresholdReport {
  Certificate theorem = Certificate::T2;  // what was asked for
  Certificate certificate = Certificate::T2;  // what decided the verdict
  double lhs = 0.0;
  double threshold = 0.0;
  double s_star = 0.0;
  std::optional<double> decay_rate_bound;
  bool stable = false;
  std::map<std::string, double> intermediates;
  std::vector<std::string> notes;

  double at(const std::string& key) const;
};

nlohmann::json to_json(const ThresholdReport& report);

struct StaticVerdict {
  bool stable;
  double margin;  // threshold - lhs
  double lhs;
  double threshold;
};

/// Homogeneous rates: beta/delta < 1/eta(A). Otherwise eta(BA - D) < 0.
StaticVerdict static_ct_condition(const Matrix& a, const EpidemicParams& params);
/// eta(BA + I - D) < 1.
StaticVerdict static_dt_condition(const Matrix& a, const EpidemicParams& params);

ThresholdReport certify_static_ct(const Matrix& a, const EpidemicParams& params);
ThresholdReport certify_static_dt(const Matrix& a, const EpidemicParams& params);

ThresholdReport certify_amai_ct(const DynamicGraph& graph, const EpidemicParams& params);
ThresholdReport certify_amai_ct(const MeanMatrix& mean, const EpidemicParams& params);

ThresholdReport certify_amei_ct(const DynamicGraph& graph, const EpidemicParams& params);
ThresholdReport certify_amei_ct(const MeanMatrix& mean, const EpidemicParams& params);

ThresholdReport certify_homogeneous(const DynamicGraph& graph, double beta, double delta);
ThresholdReport certify_homogeneous(const MeanMatrix& mean, double beta, double delta);

ThresholdReport certify_amei_dt(const DynamicGraph& graph, const EpidemicParams& params);
ThresholdReport certify_amei_dt(const MeanMatrix& mean, const EpidemicParams& params);

/// Dispatch on T1..T4, StaticCt, StaticDt.
ThresholdReport certify(const MeanMatrix& mean, const EpidemicParams& params, Certificate which);

/// xi_H for given n, eta(sgn A), Delta3 > 0 and delta/beta. Returns +inf in the
/// trivial regime beta/delta < 1/eta(sgn A), where the supremum is unbounded.
struct XiResult {
  double xi;
  double s_star;
  double kappa_inv;
  double c3;
  double sbar3;
  bool trivial;
};
XiResult xi_h(int n, double eta_support, double delta3, double delta_over_beta);

/// Largest homogeneous beta in [lo, hi] certified stable, by bisection to
/// width `tol`. Returns hi when hi itself is stable.
double threshold_in_beta(const MeanMatrix& mean, double delta, Certificate which, double lo, double hi,
                         double tol = 1e-7);
double threshold_in_beta(const DynamicGraph& graph, double delta, Certificate which, double lo, double hi,
                         double tol = 1e-7);

/// Delta1, Delta2 and Delta3 of a mean matrix.
double delta1(const Matrix& a_bar, const Vector& beta);
double delta2(const Matrix& a_bar, const Vector& beta);
double delta3(const Matrix& a_bar);

}  // namespace tempest
