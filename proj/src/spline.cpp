#include "splinemetric/spline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "splinemetric/error.hpp"

namespace splinemetric {

SplineFit::SplineFit(std::vector<double> knots, int order, Eigen::VectorXd c0,
                     Eigen::VectorXd c1)
    : knots_(std::move(knots)),
      order_(order),
      basis_(order),
      c0_(std::move(c0)),
      c1_(std::move(c1)) {
  check_order(order_);
  if (c0_.size() != order_ ||
      c1_.size() != static_cast<Eigen::Index>(knots_.size())) {
    throw DimensionError("spline coefficient lengths do not match the system");
  }
}

double SplineFit::derivative(double t, int j) const {
  if (j < 0 || j > order_) {
    throw ArgumentError("derivative order " + std::to_string(j) +
                        " exceeds the space order m = " +
                        std::to_string(order_));
  }
  double v = 0.0;
  for (int k = 0; k < order_; ++k) {
    v += c0_[k] * basis_.derivative(k, t, j);
  }
  for (std::size_t l = 0; l < knots_.size(); ++l) {
    v += c1_[static_cast<Eigen::Index>(l)] *
         k1_partial(knots_[l], t, order_, j);
  }
  return v;
}

SplineSystem::SplineSystem(SamplingGrid grid, RkhsConfig config, double lambda)
    : grid_(std::move(grid)), config_(config), lambda_(lambda) {
  const int m = config_.order;
  check_order(m);
  const auto p = static_cast<Eigen::Index>(grid_.size());
  if (p < m) {
    throw GridError("grid of " + std::to_string(p) +
                    " points is too short for order m = " + std::to_string(m));
  }
  if (!(lambda_ >= 0.0) || !std::isfinite(lambda_)) {
    throw ArgumentError("lambda must be finite and >= 0");
  }
  if (lambda_ == 0.0 && grid_.front() <= 0.0) {
    throw SingularSystemError(
        "interpolating splines (lambda = 0) need an invertible kernel Gram "
        "matrix; with derivative-at-zero boundary conditions the grid must "
        "not contain 0");
  }

  const PolyBasis basis(m);
  u_.resize(m, p);
  for (int i = 0; i < m; ++i) {
    for (Eigen::Index l = 0; l < p; ++l) {
      u_(i, l) = basis.eval(i, grid_[static_cast<std::size_t>(l)]);
    }
  }
  k1_.resize(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double v = k1(grid_[static_cast<std::size_t>(i)],
                          grid_[static_cast<std::size_t>(j)], m);
      k1_(i, j) = v;
      k1_(j, i) = v;
    }
  }

  // Pivoted factorization of K1 + lambda I; explicit inverses are never
  // formed.
  Eigen::MatrixXd regularized = k1_;
  regularized.diagonal().array() += lambda_;
  Eigen::LDLT<Eigen::MatrixXd> penalized(regularized);
  if (penalized.info() != Eigen::Success) {
    throw ConditioningError("factorization of K1 + lambda I failed");
  }

  const Eigen::MatrixXd solved_ut = penalized.solve(u_.transpose());  // p x m
  const Eigen::MatrixXd gram = u_ * solved_ut;                        // m x m
  Eigen::FullPivLU<Eigen::MatrixXd> gram_lu(gram);
  if (!gram_lu.isInvertible()) {
    throw SingularSystemError(
        "U (K1 + lambda I)^-1 U^T is singular: the grid is incompatible with "
        "the boundary conditions");
  }
  m0_ = gram_lu.solve(solved_ut.transpose());  // m x p
  m1_ = penalized.solve(Eigen::MatrixXd::Identity(p, p) -
                        u_.transpose() * m0_);  // p x p
  a_ = u_.transpose() * m0_ + k1_ * m1_;

  const Eigen::MatrixXd w = basis.boundary_gram();
  Eigen::MatrixXd metric =
      m0_.transpose() * w * m0_ + m1_.transpose() * k1_ * m1_;
  m_lambda_ = 0.5 * (metric + metric.transpose());

  Eigen::LLT<Eigen::MatrixXd> chol(m_lambda_);
  if (chol.info() != Eigen::Success) {
    // One shot of jitter; a second failure means the grid is genuinely
    // ill-conditioned and the caller must see it.
    const double jitter =
        1e-12 * m_lambda_.trace() / static_cast<double>(p);
    m_lambda_.diagonal().array() += jitter;
    chol.compute(m_lambda_);
    if (chol.info() != Eigen::Success) {
      throw ConditioningError(
          "M_lambda is not numerically positive definite (lambda = " +
          std::to_string(lambda_) + "); the grid is too ill-conditioned");
    }
  }
  r_ = chol.matrixU();
}

void SplineSystem::check_on_grid(Eigen::Index length, const char* what) const {
  if (length != static_cast<Eigen::Index>(grid_.size())) {
    throw DimensionError(std::string(what) + " has " + std::to_string(length) +
                         " values but the system grid has " +
                         std::to_string(grid_.size()));
  }
}

SplineFit SplineSystem::fit(const Eigen::VectorXd& values) const {
  check_on_grid(values.size(), "sampled function");
  if (!values.allFinite()) {
    throw DataError("sampled values contain a non-finite entry");
  }
  return SplineFit(grid_.points(), config_.order, m0_ * values, m1_ * values);
}

SplineFit SplineSystem::fit(const SampledFunction& x) const {
  if (!(x.grid == grid_)) {
    throw DimensionError("sampled function lives on a different grid");
  }
  return fit(x.values);
}

double SplineSystem::inner(const Eigen::VectorXd& u,
                           const Eigen::VectorXd& v) const {
  check_on_grid(u.size(), "left argument");
  check_on_grid(v.size(), "right argument");
  return u.dot(m_lambda_ * v);
}

Eigen::VectorXd SplineSystem::transform(const Eigen::VectorXd& u) const {
  check_on_grid(u.size(), "sampled function");
  return r_ * u;
}

Eigen::MatrixXd SplineSystem::transform_rows(
    const Eigen::MatrixXd& rows) const {
  check_on_grid(rows.cols(), "row matrix");
  return rows * r_.transpose();
}

Eigen::VectorXd SplineSystem::inverse_transform(
    const Eigen::VectorXd& z) const {
  check_on_grid(z.size(), "transformed vector");
  return r_.triangularView<Eigen::Upper>().solve(z);
}

double SplineSystem::loo_criterion(const Eigen::MatrixXd& rows) const {
  check_on_grid(rows.cols(), "row matrix");
  const auto p = static_cast<Eigen::Index>(grid_.size());
  Eigen::VectorXd denom(p);
  for (Eigen::Index t = 0; t < p; ++t) {
    const double slack = 1.0 - a_(t, t);
    if (slack < kLooGuard) {
      throw DegenerateSmootherError(
          "hat diagonal at grid index " + std::to_string(t) +
          " is within " + std::to_string(kLooGuard) +
          " of 1; the smoother is degenerate at lambda = " +
          std::to_string(lambda_));
    }
    denom[t] = slack * slack;
  }
  const Eigen::MatrixXd residuals =
      rows - rows * a_.transpose();  // row i is x_i - A x_i
  double total = 0.0;
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    double row_sum = 0.0;
    for (Eigen::Index t = 0; t < p; ++t) {
      const double r = residuals(i, t);
      row_sum += r * r / denom[t];
    }
    total += row_sum / static_cast<double>(p);
  }
  return total;
}

std::vector<double> default_lambda_grid() {
  constexpr int kCount = 25;
  const double lo = std::log10(1e-10);
  const double hi = std::log10(1e2);
  std::vector<double> grid(kCount);
  for (int i = 0; i < kCount; ++i) {
    grid[static_cast<std::size_t>(i)] =
        std::pow(10.0, lo + (hi - lo) * i / (kCount - 1));
  }
  return grid;
}

LambdaSelection select_lambda(const SamplingGrid& grid, RkhsConfig config,
                              const Eigen::MatrixXd& rows,
                              const std::vector<double>& candidates) {
  if (candidates.empty()) {
    throw ArgumentError("lambda candidate list is empty");
  }
  std::vector<double> sorted = candidates;
  std::sort(sorted.begin(), sorted.end());
  for (double c : sorted) {
    if (!(c > 0.0) || !std::isfinite(c)) {
      throw ArgumentError("lambda candidates must be positive and finite");
    }
  }

  LambdaSelection selection;
  selection.curve.reserve(sorted.size());
  double best = std::numeric_limits<double>::infinity();
  bool found = false;
  for (double lambda : sorted) {
    LambdaPoint point{lambda, std::numeric_limits<double>::infinity(), true};
    try {
      const SplineSystem system(grid, config, lambda);
      point.criterion = system.loo_criterion(rows);
      point.degenerate = false;
    } catch (const DegenerateSmootherError&) {
    } catch (const ConditioningError&) {
    }
    if (!point.degenerate && point.criterion <= best) {
      // <= keeps the larger lambda on exact ties (ascending scan).
      best = point.criterion;
      selection.lambda = lambda;
      found = true;
    }
    selection.curve.push_back(point);
  }
  if (!found) {
    throw DegenerateSmootherError(
        "every lambda candidate produced a degenerate smoother on this grid");
  }
  return selection;
}

}  // namespace splinemetric
