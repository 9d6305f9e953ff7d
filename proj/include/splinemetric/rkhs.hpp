#pragma once

#include <Eigen/Dense>

namespace splinemetric {

/// Derivative order of the Sobolev space H^m on [0, 1] under the boundary
/// conditions h(0) = h'(0) = ... = h^{(m-1)}(0) = 0. Orders 1 and 2 have
/// closed-form kernels; anything else is rejected.
struct RkhsConfig {
  int order = 2;

  explicit RkhsConfig(int m);
  RkhsConfig() = default;
};

/// Checks m in {1, 2}; throws otherwise.
void check_order(int m);

/// Reproducing kernel of the polynomial subspace:
/// k0(s, t) = sum_{k=0}^{m-1} t^k s^k / (k!)^2.
double k0(double s, double t, int m);

/// Reproducing kernel of the penalized subspace,
/// k1(s, t) = int_0^1 (t-w)_+^{m-1} (s-w)_+^{m-1} / ((m-1)!)^2 dw,
/// in closed form: min(s, t) for m = 1, and a^2 b / 2 - a^3 / 6 with
/// a = min(s, t), b = max(s, t) for m = 2.
double k1(double s, double t, int m);

/// j-th partial derivative of k1(s, .) evaluated at t, j = 0..m. The m = 1,
/// j = 1 case is the indicator of t < s; at the jump t = s the right limit 0
/// is returned.
double k1_partial(double s, double t, int m, int j);

/// Monomial basis of the null space P^{m-1}: w_k(t) = t^k, k = 0..m-1
/// (one-based w_k = t^{k-1} in the usual notation). The boundary Gram matrix
/// W = (<w_i, w_j>_0) is diagonal with entries (k!)^2.
class PolyBasis {
 public:
  explicit PolyBasis(int m);

  int size() const { return order_; }
  /// w_k(t) = t^k with 0-based k.
  double eval(int k, double t) const;
  /// j-th derivative of w_k at t.
  double derivative(int k, double t, int j) const;
  const Eigen::MatrixXd& boundary_gram() const { return gram_; }

 private:
  int order_;
  Eigen::MatrixXd gram_;
};

PolyBasis poly_basis(int m);

}  // namespace splinemetric
