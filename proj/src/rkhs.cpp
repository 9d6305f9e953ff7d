#include "splinemetric/rkhs.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "splinemetric/error.hpp"

namespace splinemetric {

namespace {

void check_unit_interval(double s, double t) {
  if (!(s >= 0.0 && s <= 1.0 && t >= 0.0 && t <= 1.0)) {
    throw ArgumentError("kernel arguments must lie in [0, 1]");
  }
}

}  // namespace

void check_order(int m) {
  if (m != 1 && m != 2) {
    throw ArgumentError("unsupported derivative order m = " +
                        std::to_string(m) + " (closed-form kernels cover 1, 2)");
  }
}

RkhsConfig::RkhsConfig(int m) : order(m) { check_order(m); }

double k0(double s, double t, int m) {
  check_order(m);
  check_unit_interval(s, t);
  // Factorials are 1 for k < 2, so the sum is 1 (m = 1) or 1 + st (m = 2).
  return m == 1 ? 1.0 : 1.0 + s * t;
}

double k1(double s, double t, int m) {
  check_order(m);
  check_unit_interval(s, t);
  if (m == 1) return std::min(s, t);
  const double a = std::min(s, t);
  const double b = std::max(s, t);
  return a * a * (b / 2.0 - a / 6.0);
}

double k1_partial(double s, double t, int m, int j) {
  check_order(m);
  check_unit_interval(s, t);
  if (j < 0 || j > m) {
    throw ArgumentError("derivative order " + std::to_string(j) +
                        " exceeds the space order m = " + std::to_string(m));
  }
  if (j == 0) return k1(s, t, m);
  if (m == 1) return t < s ? 1.0 : 0.0;
  if (j == 1) return t <= s ? s * t - t * t / 2.0 : s * s / 2.0;
  return t < s ? s - t : 0.0;  // j == 2: (s - t)_+
}

PolyBasis::PolyBasis(int m) : order_(m) {
  if (m < 1) throw ArgumentError("basis order must be >= 1");
  gram_ = Eigen::MatrixXd::Zero(m, m);
  double factorial = 1.0;
  for (int k = 0; k < m; ++k) {
    if (k > 0) factorial *= static_cast<double>(k);
    gram_(k, k) = factorial * factorial;
  }
}

double PolyBasis::eval(int k, double t) const {
  if (k < 0 || k >= order_) throw ArgumentError("basis index out of range");
  return k == 0 ? 1.0 : std::pow(t, k);
}

double PolyBasis::derivative(int k, double t, int j) const {
  if (k < 0 || k >= order_) throw ArgumentError("basis index out of range");
  if (j < 0) throw ArgumentError("derivative order must be >= 0");
  if (j == 0) return eval(k, t);
  if (j > k) return 0.0;
  // D^j t^k = k! / (k - j)! t^{k-j}
  double coeff = 1.0;
  for (int i = 0; i < j; ++i) coeff *= static_cast<double>(k - i);
  const int power = k - j;
  return power == 0 ? coeff : coeff * std::pow(t, power);
}

PolyBasis poly_basis(int m) { return PolyBasis(m); }

}  // namespace splinemetric
