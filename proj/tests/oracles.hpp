#pragma once

// Independent re-implementations used as test oracles. Nothing here calls the
// library's spectral or threshold code: spectra come from full Eigen
// decompositions and maximisation from uniform grid scans.

#include <cmath>
#include <functional>
#include <limits>
#include <utility>

#include <Eigen/Dense>

namespace oracle {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline double kappa(double b, double d, int n, double s) {
  return n * std::exp(s / b) * std::pow((b * s + d) / d, -(b * s + d) / (b * b));
}

/// kappa^{-1}(1) by plain bisection on the direct formula.
inline double kappa_inv(double b, double d, int n) {
  double lo = 0.0, hi = 1.0;
  while (kappa(b, d, n, hi) > 1.0) lo = hi, hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (kappa(b, d, n, mid) > 1.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

inline double eta(const Matrix& m) {
  Eigen::EigenSolver<Matrix> es(m, false);
  return es.eigenvalues().real().maxCoeff();
}

inline double mu(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

inline Matrix sgn(const Matrix& a) { return (a.array() > 0.0).cast<double>().matrix(); }

struct GridMax {
  double s;
  double value;
};

/// Max of f over `points` equispaced points of (lo, hi] (or [lo, hi]).
inline GridMax grid_max(const std::function<double(double)>& f, double lo, double hi, long points,
                        bool closed = false) {
  GridMax best{lo, -std::numeric_limits<double>::infinity()};
  const double h = (hi - lo) / static_cast<double>(points);
  for (long k = closed ? 0 : 1; k <= points; ++k) {
    const double s = k == points ? hi : lo + h * static_cast<double>(k);
    const double v = f(s);
    if (v > best.value) best = {s, v};
  }
  return best;
}

/// Row-maximum variance proxies, straight from the definitions.
inline double delta2(const Matrix& a, const Vector& beta) {
  double best = 0.0;
  for (int i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (int j = 0; j < a.cols(); ++j) s += beta[i] * beta[j] * a(i, j) * (1.0 - a(i, j));
    best = std::max(best, s);
  }
  return best;
}

inline double delta1(const Matrix& a, const Vector& beta) {
  double best = 0.0;
  for (int i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (int j = 0; j < a.cols(); ++j)
      s += beta[i] * beta[i] * a(i, j) * (1.0 - a(i, j)) + beta[j] * beta[j] * a(j, i) * (1.0 - a(j, i));
    best = std::max(best, s);
  }
  return best;
}

}  // namespace oracle
