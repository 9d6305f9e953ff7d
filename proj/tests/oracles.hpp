// Test-only oracles, independent of the library paths they check:
// composite Gauss-Legendre quadrature, the k1 integral definition, Sobolev
// inner products of fitted splines by quadrature, the raw smoothing
// objective, and a brute-force KRR leave-one-out.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "splinemetric/learners.hpp"
#include "splinemetric/spline.hpp"

namespace oracles {

/// 5-point Gauss-Legendre panel, exact for polynomials up to degree 9.
inline double gauss5(const std::function<double(double)>& f, double a,
                     double b) {
  static const double nodes[5] = {-0.9061798459386640, -0.5384693101056831,
                                  0.0, 0.5384693101056831,
                                  0.9061798459386640};
  static const double weights[5] = {0.2369268850561891, 0.4786286704993665,
                                    0.5688888888888889, 0.4786286704993665,
                                    0.2369268850561891};
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double sum = 0.0;
  for (int i = 0; i < 5; ++i) {
    sum += weights[i] * f(mid + half * nodes[i]);
  }
  return half * sum;
}

/// Integrates over [0, 1] split at the given breakpoints (each panel further
/// subdivided `refine` times).
inline double piecewise_quadrature(const std::function<double(double)>& f,
                                   std::vector<double> breakpoints,
                                   int refine = 1) {
  breakpoints.push_back(0.0);
  breakpoints.push_back(1.0);
  std::sort(breakpoints.begin(), breakpoints.end());
  breakpoints.erase(std::unique(breakpoints.begin(), breakpoints.end()),
                    breakpoints.end());
  double total = 0.0;
  for (std::size_t i = 1; i < breakpoints.size(); ++i) {
    const double a = breakpoints[i - 1];
    const double b = breakpoints[i];
    if (b <= a) continue;
    for (int r = 0; r < refine; ++r) {
      total += gauss5(f, a + (b - a) * r / refine, a + (b - a) * (r + 1) / refine);
    }
  }
  return total;
}

/// k1 straight from its integral definition (no closed form).
/// (m-1)! is 1 for both supported orders.
inline double k1_by_quadrature(double s, double t, int m) {
  return piecewise_quadrature(
      [&](double w) {
        const double ts = t - w > 0.0 ? std::pow(t - w, m - 1) : 0.0;
        const double ss = s - w > 0.0 ? std::pow(s - w, m - 1) : 0.0;
        return ts * ss;
      },
      {s, t});
}

/// Sobolev inner product of two fitted splines evaluated the long way:
/// quadrature of the m-th derivative product plus the boundary terms
/// sum_j D^{j-1} u(0) D^{j-1} v(0).
inline double sobolev_inner_by_quadrature(const splinemetric::SplineFit& u,
                                          const splinemetric::SplineFit& v) {
  const int m = u.order();
  std::vector<double> breakpoints = u.knots();
  breakpoints.insert(breakpoints.end(), v.knots().begin(), v.knots().end());
  double inner = piecewise_quadrature(
      [&](double t) { return u.derivative(t, m) * v.derivative(t, m); },
      std::move(breakpoints));
  for (int j = 0; j < m; ++j) {
    inner += u.derivative(0.0, j) * v.derivative(0.0, j);
  }
  return inner;
}

/// The raw smoothing objective: mean squared grid residual plus
/// lambda times the m-th derivative energy of h.
inline double smoothing_objective(const std::function<double(double)>& h,
                                  const std::function<double(double)>& h_deriv_m,
                                  const splinemetric::SamplingGrid& grid,
                                  const Eigen::VectorXd& samples,
                                  double lambda) {
  double data = 0.0;
  for (std::size_t l = 0; l < grid.size(); ++l) {
    const double r = samples[static_cast<Eigen::Index>(l)] - h(grid[l]);
    data += r * r;
  }
  data /= static_cast<double>(grid.size());
  const double penalty = piecewise_quadrature(
      [&](double t) {
        const double d = h_deriv_m(t);
        return d * d;
      },
      grid.points());
  return data + lambda * penalty;
}

/// Leave-one-out mean squared error by n explicit refits.
inline double krr_loo_by_refit(const Eigen::MatrixXd& inputs,
                               const Eigen::VectorXd& targets,
                               const splinemetric::KernelSpec& kernel,
                               double delta) {
  const Eigen::Index n = inputs.rows();
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::MatrixXd rest_x(n - 1, inputs.cols());
    Eigen::VectorXd rest_y(n - 1);
    Eigen::Index r = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      rest_x.row(r) = inputs.row(j);
      rest_y[r++] = targets[j];
    }
    Eigen::MatrixXd gram = splinemetric::kernel_matrix(rest_x, rest_x, kernel);
    gram.diagonal().array() += delta;
    const Eigen::VectorXd coeffs = gram.ldlt().solve(rest_y);
    const double prediction =
        splinemetric::kernel_matrix(inputs.row(i), rest_x, kernel)
            .row(0)
            .dot(coeffs);
    const double e = targets[i] - prediction;
    total += e * e;
  }
  return total / static_cast<double>(n);
}

}  // namespace oracles
