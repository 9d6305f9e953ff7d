#pragma once

#include <Eigen/Dense>
#include <vector>

#include "splinemetric/dataset.hpp"
#include "splinemetric/rkhs.hpp"

namespace splinemetric {

/// One fitted smoothing spline
///   s(t) = sum_k c0_k w_k(t) + sum_l c1_l k1(t_l, t),
/// self-contained (owns its knots) so it outlives the system that built it.
class SplineFit {
 public:
  SplineFit(std::vector<double> knots, int order, Eigen::VectorXd c0,
            Eigen::VectorXd c1);

  /// D^j s(t) for j = 0..m.
  double derivative(double t, int j) const;
  double value(double t) const { return derivative(t, 0); }

  const Eigen::VectorXd& null_space_coeffs() const { return c0_; }
  const Eigen::VectorXd& representer_coeffs() const { return c1_; }
  int order() const { return order_; }
  const std::vector<double>& knots() const { return knots_; }

 private:
  std::vector<double> knots_;
  int order_;
  PolyBasis basis_;
  Eigen::VectorXd c0_;
  Eigen::VectorXd c1_;
};

/// Per-candidate entry of the smoothing-parameter search curve.
struct LambdaPoint {
  double lambda = 0.0;
  double criterion = 0.0;
  bool degenerate = false;  // hat diagonal hit the guard, candidate excluded
};

struct LambdaSelection {
  double lambda = 0.0;
  std::vector<LambdaPoint> curve;  // ascending in lambda
};

/// All grid- and lambda-dependent matrices of the smoothing-spline operator:
/// the basis value matrix U, the kernel Gram K1, the coefficient maps M0 and
/// M1, the metric M_lambda with its Cholesky factor R (R^T R = M_lambda),
/// and the influence (hat) matrix A. Immutable after construction and safe
/// to share across threads.
class SplineSystem {
 public:
  /// Builds every matrix and fails rather than returning a system whose
  /// M_lambda is not symmetric positive definite. lambda = 0 (interpolating
  /// splines) requires an invertible K1, which for these boundary conditions
  /// means every grid point is positive.
  SplineSystem(SamplingGrid grid, RkhsConfig config, double lambda);

  const SamplingGrid& grid() const { return grid_; }
  int order() const { return config_.order; }
  double lambda() const { return lambda_; }

  const Eigen::MatrixXd& basis_values() const { return u_; }       // U, m x p
  const Eigen::MatrixXd& kernel_gram() const { return k1_; }       // K1
  const Eigen::MatrixXd& null_space_map() const { return m0_; }    // M0
  const Eigen::MatrixXd& representer_map() const { return m1_; }   // M1
  const Eigen::MatrixXd& metric() const { return m_lambda_; }      // M_lambda
  const Eigen::MatrixXd& cholesky_factor() const { return r_; }    // R, upper
  const Eigen::MatrixXd& hat_matrix() const { return a_; }         // A

  /// Coefficients of the unique minimizer for sampled values x on the grid:
  /// c0 = M0 x, c1 = M1 x.
  SplineFit fit(const Eigen::VectorXd& values) const;
  SplineFit fit(const SampledFunction& x) const;

  /// Sobolev inner product of the two fitted splines, u^T M_lambda v.
  double inner(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const;

  /// R u; Euclidean geometry of the transforms reproduces the Sobolev
  /// geometry of the fits.
  Eigen::VectorXd transform(const Eigen::VectorXd& u) const;

  /// Applies the transform to every row of X (returns X R^T).
  Eigen::MatrixXd transform_rows(const Eigen::MatrixXd& rows) const;

  /// Solves R u = z; the transform loses no information.
  Eigen::VectorXd inverse_transform(const Eigen::VectorXd& z) const;

  /// Total leave-one-out reconstruction error of all rows of X under this
  /// system: sum_i (1/p) sum_t ((x_i - A x_i)_t / (1 - A_tt))^2.
  double loo_criterion(const Eigen::MatrixXd& rows) const;

 private:
  void check_on_grid(Eigen::Index length, const char* what) const;

  SamplingGrid grid_;
  RkhsConfig config_;
  double lambda_;
  Eigen::MatrixXd u_, k1_, m0_, m1_, m_lambda_, r_, a_;
};

/// Guard on the (1 - A_tt)^2 denominators of the leave-one-out criterion.
inline constexpr double kLooGuard = 1e-8;

/// 25 log-spaced candidates in [1e-10, 1e2].
std::vector<double> default_lambda_grid();

/// Minimizes the summed leave-one-out criterion over the candidates;
/// candidates whose hat diagonal trips the guard are excluded, ties break
/// toward the larger (smoother) lambda. Throws when every candidate is
/// degenerate.
LambdaSelection select_lambda(const SamplingGrid& grid, RkhsConfig config,
                              const Eigen::MatrixXd& rows,
                              const std::vector<double>& candidates);

}  // namespace splinemetric
