#pragma once

// Spectral and scalar kernels shared by the stability certificates.

#include <cstddef>
#include <functional>
#include <limits>
#include <span>

#include <Eigen/Dense>

namespace tempest {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Parameters of the concentration function kappa_{b,d} on n x n matrices.
struct KappaParams {
  double b;  // deviation bound
  double d;  // variance proxy
  int n;
};

/// log kappa_{b,d}(s). For d = 0 this is log n at s = 0 and -inf for s > 0.
double log_kappa(const KappaParams& p, double s);
double kappa(const KappaParams& p, double s);
/// The s >= 0 with kappa(s) = 1. Requires d > 0.
double kappa_inv_at_one(const KappaParams& p);

/// c^- = (|c| - c) / 2.
constexpr double c_minus(double c) noexcept { return c < 0.0 ? -c : 0.0; }

bool is_metzler(const Matrix& m);
bool is_symmetric(const Matrix& m, double tol = 0.0);

/// Matrix-free operator for the Perron iteration. `apply` computes y = M x.
class LinearOperator {
 public:
  virtual ~LinearOperator() = default;
  virtual std::size_t dim() const = 0;
  virtual void apply(std::span<const double> x, std::span<double> y) const = 0;
  virtual double max_abs_diagonal() const = 0;
  virtual double max_offdiagonal_row_sum() const = 0;
};

class DenseOperator final : public LinearOperator {
 public:
  explicit DenseOperator(const Matrix& m) : m_(m) {}
  std::size_t dim() const override { return static_cast<std::size_t>(m_.rows()); }
  void apply(std::span<const double> x, std::span<double> y) const override;
  double max_abs_diagonal() const override;
  double max_offdiagonal_row_sum() const override;

 private:
  const Matrix& m_;
};

struct PowerIterationOptions {
  double tolerance = 1e-12;  // relative error target on the eigenvalue
  int max_iterations = 100000;
};

struct PowerIterationResult {
  double value;
  int iterations;
  Vector vector;  // nonnegative, unit 1-norm
};

/// Spectral abscissa of a Metzler operator by power iteration on M + cI.
/// Throws ConvergenceFailure when the iteration budget runs out.
PowerIterationResult perron_abscissa(const LinearOperator& op, PowerIterationOptions options = {},
                                     const Vector* warm_start = nullptr);

/// Largest eigenvalue of a symmetric matrix: dense solver up to 64x64,
/// restarted Lanczos with full reorthogonalisation above.
double symmetric_max_eigenvalue(const Matrix& m);
double lanczos_max_eigenvalue(const Matrix& m, int krylov_dim = 64);

/// Full eigendecomposition; the reference path.
double dense_spectral_abscissa(const Matrix& m);

/// eta(M): max real part of the spectrum. Symmetric inputs use the symmetric
/// solver, Metzler inputs the Perron iteration, anything else up to 64x64
/// the dense fallback.
double spectral_abscissa(const Matrix& m);

/// mu(M) = eta(M + M^T) / 2.
double matrix_measure(const Matrix& m);

// 1-D maximisation ------------------------------------------------------------

struct MaximizeOptions {
  int budget = 4096;
  /// Offset of the first grid point, as a fraction of (hi - lo).
  double first_offset = 1e-9;
  /// Evaluate the left endpoint too (closed interval [lo, hi]).
  bool include_lo = false;
  /// Objective values above this raise DivergenceDetected.
  double divergence_cap = std::numeric_limits<double>::infinity();
  int refine_iterations = 100;
};

struct ScalarMaximizeResult {
  double s_star;
  double value;
  double lo;
  double hi;
};

/// Maximise over (lo, hi]: geometric grid clustered toward lo, then
/// golden-section refinement around the best grid bracket. `value` is the
/// objective at an evaluated point, hence a lower bound on the supremum.
ScalarMaximizeResult maximize_on_interval(const std::function<double(double)>& objective, double lo,
                                          double hi, MaximizeOptions options = {});

}  // namespace tempest
