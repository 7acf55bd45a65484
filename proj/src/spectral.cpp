#include "tempest/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>

#include <Eigen/Eigenvalues>

#include "tempest/errors.hpp"

namespace tempest {

// kappa -----------------------------------------------------------------------

double log_kappa(const KappaParams& p, double s) {
  if (!(s >= 0.0)) throw DomainError("kappa is defined for s >= 0");
  if (!(p.b > 0.0) || !(p.d >= 0.0) || p.n < 1) throw DomainError("kappa needs b > 0, d >= 0, n >= 1");
  const double log_n = std::log(static_cast<double>(p.n));
  if (s == 0.0) return log_n;
  if (p.d == 0.0) return -std::numeric_limits<double>::infinity();
  const double bs = p.b * s;
  return log_n + s / p.b - ((bs + p.d) / (p.b * p.b)) * std::log1p(bs / p.d);
}

double kappa(const KappaParams& p, double s) { return std::exp(log_kappa(p, s)); }

double kappa_inv_at_one(const KappaParams& p) {
  if (!(p.d > 0.0)) throw DomainError("kappa^{-1}(1) needs a positive variance proxy");
  if (p.n == 1) return 0.0;
  double lo = 0.0;
  double hi = 1.0;
  while (log_kappa(p, hi) > 0.0) {
    lo = hi;
    hi *= 2.0;
    if (!std::isfinite(hi)) throw NumericalFailure("kappa^{-1}(1) bracket overflow");
  }
  // Bisect down to adjacent doubles; kappa is strictly decreasing.
  for (int it = 0; it < 2000; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (log_kappa(p, mid) > 0.0 ? lo : hi) = mid;
  }
  return std::abs(log_kappa(p, lo)) < std::abs(log_kappa(p, hi)) ? lo : hi;
}

// Matrix predicates -----------------------------------------------------------

bool is_metzler(const Matrix& m) {
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      if (r != c && m(r, c) < 0.0) return false;
  return true;
}

bool is_symmetric(const Matrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = c + 1; r < m.rows(); ++r)
      if (std::abs(m(r, c) - m(c, r)) > tol) return false;
  return true;
}

// Dense operator --------------------------------------------------------------

void DenseOperator::apply(std::span<const double> x, std::span<double> y) const {
  Eigen::Map<const Vector> xv(x.data(), static_cast<Eigen::Index>(x.size()));
  Eigen::Map<Vector> yv(y.data(), static_cast<Eigen::Index>(y.size()));
  yv.noalias() = m_ * xv;
}

double DenseOperator::max_abs_diagonal() const { return m_.diagonal().cwiseAbs().maxCoeff(); }

double DenseOperator::max_offdiagonal_row_sum() const {
  double best = 0.0;
  for (Eigen::Index r = 0; r < m_.rows(); ++r) {
    double s = 0.0;
    for (Eigen::Index c = 0; c < m_.cols(); ++c)
      if (r != c) s += m_(r, c);
    best = std::max(best, s);
  }
  return best;
}

// Perron iteration ------------------------------------------------------------

PowerIterationResult perron_abscissa(const LinearOperator& op, PowerIterationOptions options,
                                     const Vector* warm_start) {
  const auto n = op.dim();
  if (n == 0) throw DomainError("empty operator");
  // Shift past the diagonal so M + cI >= 0; the extra half Gershgorin radius
  // puts weight on the diagonal, which breaks periodic (bipartite) patterns.
  const double shift = op.max_abs_diagonal() + 0.5 * op.max_offdiagonal_row_sum();

  Vector x = Vector::Constant(static_cast<Eigen::Index>(n), 1.0 / static_cast<double>(n));
  if (warm_start && warm_start->size() == x.size() && warm_start->minCoeff() >= 0.0 && warm_start->sum() > 0.0) {
    x = *warm_start / warm_start->sum();
    // Keep every component alive so the Collatz-Wielandt bounds stay usable.
    x = 0.999 * x + Vector::Constant(x.size(), 0.001 / static_cast<double>(n));
  }
  Vector y(x.size());

  double previous = std::numeric_limits<double>::quiet_NaN();
  double previous_step = std::numeric_limits<double>::quiet_NaN();
  int settled = 0;
  for (int it = 1; it <= options.max_iterations; ++it) {
    op.apply(std::span<const double>(x.data(), n), std::span<double>(y.data(), n));
    y += shift * x;
    y = y.cwiseMax(0.0);
    const double lambda = y.sum();
    if (!(lambda > 0.0)) return {-shift, it, x};

    // Collatz-Wielandt bracket over the support of x.
    double lower = std::numeric_limits<double>::infinity();
    double upper = 0.0;
    bool positive = true;
    for (Eigen::Index k = 0; k < x.size(); ++k) {
      if (x[k] > 1e-300) {
        const double ratio = y[k] / x[k];
        lower = std::min(lower, ratio);
        upper = std::max(upper, ratio);
      } else {
        positive = false;
      }
    }
    const double scale = std::max(1.0, lambda);
    const double target = options.tolerance * scale;
    x = y / lambda;

    if (positive && upper - lower <= target) return {0.5 * (upper + lower) - shift, it, x};

    if (std::isfinite(previous)) {
      const double step = std::abs(lambda - previous);
      if (step == 0.0 && it > 3) return {lambda - shift, it, x};
      if (std::isfinite(previous_step) && previous_step > 0.0) {
        const double ratio = step / previous_step;
        const double err = ratio < 1.0 ? step * ratio / (1.0 - ratio) : std::numeric_limits<double>::infinity();
        settled = (err <= target && step <= target) ? settled + 1 : 0;
        if (settled >= 3 && it > 5) return {lambda - shift, it, x};
      }
      previous_step = step;
    }
    previous = lambda;
  }
  throw ConvergenceFailure("power iteration did not converge in " + std::to_string(options.max_iterations) +
                           " iterations (last estimate " + std::to_string(previous - shift) + ")");
}

// Symmetric solvers -----------------------------------------------------------

double lanczos_max_eigenvalue(const Matrix& m, int krylov_dim) {
  const auto n = m.rows();
  const int k_max = static_cast<int>(std::min<Eigen::Index>(n, krylov_dim));
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff() * static_cast<double>(n));

  // Deterministic start vector with no sign pattern bias.
  Vector start(n);
  for (Eigen::Index k = 0; k < n; ++k) start[k] = 1.0 + 0.5 * std::sin(1.0 + 2.3 * static_cast<double>(k));
  start.normalize();

  double theta = 0.0;
  for (int restart = 0; restart < 500; ++restart) {
    Matrix basis(n, k_max);
    Vector alpha(k_max), beta(k_max);
    basis.col(0) = start;
    int steps = 0;
    double last_beta = 0.0;
    for (int j = 0; j < k_max; ++j) {
      Vector w = m * basis.col(j);
      alpha[j] = basis.col(j).dot(w);
      // Two passes of classical Gram-Schmidt against the whole basis.
      for (int pass = 0; pass < 2; ++pass)
        w -= basis.leftCols(j + 1) * (basis.leftCols(j + 1).transpose() * w);
      const double b = w.norm();
      steps = j + 1;
      last_beta = b;
      if (j + 1 == k_max) break;
      if (b <= 1e-14 * scale) break;  // invariant subspace
      beta[j] = b;
      basis.col(j + 1) = w / b;
    }
    Matrix t = Matrix::Zero(steps, steps);
    for (int j = 0; j < steps; ++j) {
      t(j, j) = alpha[j];
      if (j + 1 < steps) t(j, j + 1) = t(j + 1, j) = beta[j];
    }
    Eigen::SelfAdjointEigenSolver<Matrix> tri(t);
    const Eigen::Index top = steps - 1;
    theta = tri.eigenvalues()[top];
    const Vector y = tri.eigenvectors().col(top);
    const double residual = std::abs(last_beta * y[top]);
    if (residual <= 1e-13 * std::max(1.0, std::abs(theta)) || steps < k_max || steps == n) return theta;
    start = (basis.leftCols(steps) * y).normalized();
  }
  throw ConvergenceFailure("Lanczos did not converge (last Ritz value " + std::to_string(theta) + ")");
}

double symmetric_max_eigenvalue(const Matrix& m) {
  if (m.rows() != m.cols() || m.rows() == 0) throw DomainError("symmetric solver needs a square matrix");
  if (m.rows() <= 64) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw ConvergenceFailure("dense symmetric eigensolver failed");
    return es.eigenvalues().maxCoeff();
  }
  return lanczos_max_eigenvalue(m);
}

double dense_spectral_abscissa(const Matrix& m) {
  if (m.rows() != m.cols() || m.rows() == 0) throw DomainError("spectral abscissa needs a square matrix");
  Eigen::EigenSolver<Matrix> es(m, false);
  if (es.info() != Eigen::Success) throw ConvergenceFailure("dense eigensolver failed");
  return es.eigenvalues().real().maxCoeff();
}

double spectral_abscissa(const Matrix& m) {
  if (m.rows() != m.cols() || m.rows() == 0) throw DomainError("spectral abscissa needs a square matrix");
  if (is_symmetric(m)) return symmetric_max_eigenvalue(m);
  if (is_metzler(m)) {
    try {
      return perron_abscissa(DenseOperator(m)).value;
    } catch (const ConvergenceFailure&) {
      if (m.rows() > 64) throw;
    }
  }
  if (m.rows() > 64) throw DomainError("general non-symmetric spectra are only supported up to 64x64");
  return dense_spectral_abscissa(m);
}

double matrix_measure(const Matrix& m) {
  const Matrix sym = 0.5 * (m + m.transpose());
  return symmetric_max_eigenvalue(sym);
}

// Maximisation ----------------------------------------------------------------

ScalarMaximizeResult maximize_on_interval(const std::function<double(double)>& objective, double lo, double hi,
                                          MaximizeOptions options) {
  if (!(hi > lo)) throw EmptyInterval("maximisation interval is empty");
  const int budget = std::max(options.budget, 3);
  const double width = hi - lo;

  auto eval = [&](double s) {
    const double v = objective(s);
    if (std::isnan(v)) return -std::numeric_limits<double>::infinity();
    if (v > options.divergence_cap || v == std::numeric_limits<double>::infinity())
      throw DivergenceDetected("objective exceeds the divergence cap at s = " + std::to_string(s));
    return v;
  };

  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(budget) + 1);
  if (options.include_lo) grid.push_back(lo);
  const double log_first = std::log(options.first_offset);
  for (int k = 0; k < budget; ++k) {
    const double frac = std::exp(log_first * (1.0 - static_cast<double>(k) / (budget - 1)));
    grid.push_back(k == budget - 1 ? hi : lo + width * frac);
  }

  std::size_t best = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  std::vector<double> values(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    values[k] = eval(grid[k]);
    if (values[k] > best_value) best_value = values[k], best = k;
  }
  ScalarMaximizeResult result{grid[best], best_value, lo, hi};
  if (!std::isfinite(best_value)) return result;

  // Golden-section search on the bracket around the best grid point.
  double a = grid[best > 0 ? best - 1 : 0];
  double b = grid[std::min(best + 1, grid.size() - 1)];
  constexpr double kInvPhi = 0.6180339887498949;
  double x1 = b - kInvPhi * (b - a);
  double x2 = a + kInvPhi * (b - a);
  double f1 = eval(x1), f2 = eval(x2);
  for (int it = 0; it < options.refine_iterations && (b - a) > 1e-15 * std::max(1.0, std::abs(b)); ++it) {
    if (f1 > result.value && x1 > lo) result.value = f1, result.s_star = x1;
    if (f2 > result.value && x2 > lo) result.value = f2, result.s_star = x2;
    if (f1 >= f2) {
      b = x2, x2 = x1, f2 = f1;
      x1 = b - kInvPhi * (b - a);
      f1 = eval(x1);
    } else {
      a = x1, x1 = x2, f1 = f2;
      x2 = a + kInvPhi * (b - a);
      f2 = eval(x2);
    }
  }
  if (f1 > result.value && x1 > lo) result.value = f1, result.s_star = x1;
  if (f2 > result.value && x2 > lo) result.value = f2, result.s_star = x2;
  return result;
}

}  // namespace tempest
