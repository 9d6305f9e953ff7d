#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "splinemetric/dataset.hpp"
#include "splinemetric/error.hpp"
#include "splinemetric/rng.hpp"
#include "splinemetric/spline.hpp"

using namespace splinemetric;

namespace {

SamplingGrid positive_uniform(std::size_t p) {
  return SamplingGrid::uniform(p, /*include_zero=*/false);
}

Eigen::VectorXd sample(const SamplingGrid& grid,
                       const std::function<double(double)>& f) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t l = 0; l < grid.size(); ++l) {
    v[static_cast<Eigen::Index>(l)] = f(grid[l]);
  }
  return v;
}

Eigen::VectorXd random_vector(Rng& rng, std::size_t p) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(p));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.gaussian();
  return v;
}

}  // namespace

TEST_CASE("one-point system solved by hand") {
  // m = 1, grid {0.5}, lambda = 1: K1 = [0.5], U = [1];
  // M0 = (1/1.5)^-1 * (1/1.5) = [1], M1 = (1/1.5)(1 - 1) = [0], M = W = [1].
  const SplineSystem system(SamplingGrid({0.5}), RkhsConfig(1), 1.0);
  CHECK(system.kernel_gram()(0, 0) == doctest::Approx(0.5));
  CHECK(system.null_space_map()(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(system.representer_map()(0, 0) ==
        doctest::Approx(0.0).scale(1.0).epsilon(1e-14));
  CHECK(system.metric()(0, 0) == doctest::Approx(1.0).epsilon(1e-13));

  // The fit is the constant x(0.5).
  Eigen::VectorXd x(1);
  x << 3.25;
  const SplineFit fit = system.fit(x);
  CHECK(fit.value(0.1) == doctest::Approx(3.25).epsilon(1e-13));
  CHECK(fit.value(0.9) == doctest::Approx(3.25).epsilon(1e-13));
}

TEST_CASE("operator identities of the construction hold to 1e-9") {
  Rng rng(2024);
  for (int m : {1, 2}) {
    for (double lambda : {1e-6, 1e-3, 1e-1, 10.0}) {
      const SamplingGrid grid = positive_uniform(17);
      const SplineSystem system(grid, RkhsConfig(m), lambda);
      const auto p = static_cast<Eigen::Index>(grid.size());

      Eigen::MatrixXd regularized = system.kernel_gram();
      regularized.diagonal().array() += lambda;
      const Eigen::MatrixXd& u = system.basis_values();

      // M0 definition: (U P^-1 U^T) M0 = U P^-1 with P = K1 + lambda I.
      const Eigen::MatrixXd p_inv_ut = regularized.ldlt().solve(u.transpose());
      const Eigen::MatrixXd lhs0 = (u * p_inv_ut) * system.null_space_map();
      const Eigen::MatrixXd rhs0 = p_inv_ut.transpose();
      CHECK((lhs0 - rhs0).cwiseAbs().maxCoeff() <=
            1e-9 * (1.0 + rhs0.cwiseAbs().maxCoeff()));

      // M1 definition: P M1 = I - U^T M0.
      const Eigen::MatrixXd lhs1 = regularized * system.representer_map();
      const Eigen::MatrixXd rhs1 = Eigen::MatrixXd::Identity(p, p) -
                                   u.transpose() * system.null_space_map();
      CHECK((lhs1 - rhs1).cwiseAbs().maxCoeff() <= 1e-9);

      // Metric symmetry and positive definiteness.
      const Eigen::MatrixXd& metric = system.metric();
      CHECK((metric - metric.transpose()).cwiseAbs().maxCoeff() == 0.0);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigen(metric);
      CHECK(eigen.eigenvalues().minCoeff() > 0.0);

      // Cholesky identity.
      const Eigen::MatrixXd& r = system.cholesky_factor();
      CHECK((r.transpose() * r - metric).cwiseAbs().maxCoeff() <=
            1e-9 * metric.cwiseAbs().maxCoeff());
    }
  }
}

TEST_CASE("hat matrix reproduces sampled polynomials of degree < m") {
  const SamplingGrid grid = SamplingGrid::uniform(10);
  const SplineSystem system(grid, RkhsConfig(2), 1e-3);
  const Eigen::VectorXd line = sample(grid, [](double t) { return 2.0 - 3.0 * t; });
  const Eigen::VectorXd smoothed = system.hat_matrix() * line;
  CHECK((smoothed - line).cwiseAbs().maxCoeff() <= 1e-9);

  const SplineSystem order1(grid, RkhsConfig(1), 0.5);
  const Eigen::VectorXd constant = Eigen::VectorXd::Constant(10, 4.2);
  CHECK((order1.hat_matrix() * constant - constant).cwiseAbs().maxCoeff() <=
        1e-9);
}

TEST_CASE("fit: linearity, polynomial reproduction, interpolation limit") {
  const SamplingGrid grid = positive_uniform(50);
  const SplineSystem system(grid, RkhsConfig(2), 3e-4);

  const SplineFit zero = system.fit(Eigen::VectorXd::Zero(50));
  CHECK(zero.null_space_coeffs().cwiseAbs().maxCoeff() == 0.0);
  CHECK(zero.representer_coeffs().cwiseAbs().maxCoeff() == 0.0);
  CHECK(zero.value(0.37) == 0.0);

  const SplineFit line = system.fit(sample(grid, [](double t) { return 1.0 + 2.0 * t; }));
  for (int i = 0; i <= 50; ++i) {
    const double t = i / 50.0;
    CHECK(line.value(t) == doctest::Approx(1.0 + 2.0 * t).epsilon(1e-9));
  }
  CHECK(line.derivative(0.3, 1) == doctest::Approx(2.0).epsilon(1e-9));

  // lambda -> 0 approaches the interpolating spline.
  const SplineSystem tight(grid, RkhsConfig(1), 1e-12);
  const Eigen::VectorXd wave =
      sample(grid, [](double t) { return std::sin(2 * std::numbers::pi * t); });
  const Eigen::VectorXd fitted = tight.hat_matrix() * wave;
  CHECK((fitted - wave).cwiseAbs().maxCoeff() < 1e-6);

  CHECK_THROWS_AS(system.fit(Eigen::VectorXd::Zero(49)), DimensionError);
}

TEST_CASE("exact interpolation at lambda = 0 on positive grids") {
  const SamplingGrid grid = positive_uniform(20);
  const SplineSystem interpolant(grid, RkhsConfig(2), 0.0);
  Rng rng(8);
  const Eigen::VectorXd x = random_vector(rng, 20);
  CHECK(((interpolant.hat_matrix() * x) - x).cwiseAbs().maxCoeff() < 1e-8);

  // Grids containing zero are rejected with lambda = 0.
  CHECK_THROWS_AS(SplineSystem(SamplingGrid::uniform(20), RkhsConfig(2), 0.0),
                  SingularSystemError);
}

TEST_CASE("evaluate is consistent with the hat matrix rows") {
  Rng rng(31);
  for (int m : {1, 2}) {
    const SamplingGrid grid = positive_uniform(23);
    const SplineSystem system(grid, RkhsConfig(m), 2e-3);
    const Eigen::VectorXd x = random_vector(rng, 23);
    const SplineFit fit = system.fit(x);
    const Eigen::VectorXd fitted = system.hat_matrix() * x;
    for (std::size_t l = 0; l < grid.size(); ++l) {
      CHECK(fit.value(grid[l]) ==
            doctest::Approx(fitted[static_cast<Eigen::Index>(l)])
                .epsilon(1e-10));
    }
    CHECK_THROWS_AS(fit.derivative(0.5, m + 1), ArgumentError);

    // Boundary conditions of the penalized part: with c0 = 0 every
    // derivative up to m - 1 vanishes at zero.
    const SplineFit penalized(grid.points(), m,
                              Eigen::VectorXd::Zero(m),
                              fit.representer_coeffs());
    for (int j = 0; j < m; ++j) {
      CHECK(penalized.derivative(0.0, j) == 0.0);
    }
  }
}

TEST_CASE("variational optimality of the fit") {
  Rng rng(47);
  for (int m : {1, 2}) {
    const SamplingGrid grid = positive_uniform(12);
    const double lambda = 5e-3;
    const SplineSystem system(grid, RkhsConfig(m), lambda);
    const Eigen::VectorXd x = random_vector(rng, 12);
    const SplineFit fit = system.fit(x);

    // The system's lambda weighs the unnormalized data term (Theorem 1
    // convention); against the mean squared residual the penalty weight is
    // lambda / p. Same minimizer family either way.
    const double penalty_weight = lambda / static_cast<double>(grid.size());
    const auto objective_of = [&](const SplineFit& g) {
      return oracles::smoothing_objective(
          [&](double t) { return g.value(t); },
          [&](double t) { return g.derivative(t, m); }, grid, x,
          penalty_weight);
    };
    const double at_minimum = objective_of(fit);

    for (int trial = 0; trial < 20; ++trial) {
      // Random direction in span{w_k} + span{k1(t_l, .)}.
      Eigen::VectorXd dc0 = random_vector(rng, static_cast<std::size_t>(m));
      Eigen::VectorXd dc1 = random_vector(rng, grid.size());
      for (double eps : {1e-3, -1e-3}) {
        const SplineFit perturbed(grid.points(), m,
                                  fit.null_space_coeffs() + eps * dc0,
                                  fit.representer_coeffs() + eps * dc1);
        CHECK(objective_of(perturbed) >= at_minimum - 1e-12);
      }
    }
  }
}

TEST_CASE("metric inner product equals the Sobolev inner product of fits") {
  Rng rng(53);
  for (int m : {1, 2}) {
    for (std::size_t p : {10, 30}) {
      const SamplingGrid grid = positive_uniform(p);
      const SplineSystem system(grid, RkhsConfig(m), 1e-2);
      for (int trial = 0; trial < 10; ++trial) {
        const Eigen::VectorXd u = random_vector(rng, p);
        const Eigen::VectorXd v = random_vector(rng, p);
        const double by_matrix = system.inner(u, v);
        const double by_quadrature = oracles::sobolev_inner_by_quadrature(
            system.fit(u), system.fit(v));
        CHECK(by_matrix ==
              doctest::Approx(by_quadrature).epsilon(1e-7).scale(1.0));
        CHECK(system.inner(u, v) == doctest::Approx(system.inner(v, u)));
      }
      CHECK(system.inner(Eigen::VectorXd::Zero(p),
                         random_vector(rng, p)) == 0.0);
    }
  }
}

TEST_CASE("transform: isometry, invertibility, Sobolev norm limit") {
  Rng rng(67);
  const std::size_t p = 40;
  const SamplingGrid grid = positive_uniform(p);
  for (int m : {1, 2}) {
    const SplineSystem system(grid, RkhsConfig(m), 1e-4);
    for (int trial = 0; trial < 25; ++trial) {
      const Eigen::VectorXd u = random_vector(rng, p);
      const Eigen::VectorXd v = random_vector(rng, p);
      const double euclidean =
          (system.transform(u) - system.transform(v)).squaredNorm();
      const double metric = system.inner(u - v, u - v);
      CHECK(euclidean == doctest::Approx(metric).epsilon(1e-9));

      const Eigen::VectorXd recovered =
          system.inverse_transform(system.transform(u));
      CHECK((recovered - u).cwiseAbs().maxCoeff() < 1e-8);
    }
  }

  // ||R u||^2 for u = samples of t -> t approaches the Sobolev norm
  // integral(1^2) + u(0)^2 = 1 as the grid refines. The grid must contain 0
  // so that the data pins the boundary value.
  const SamplingGrid fine = SamplingGrid::uniform(100);
  const SplineSystem system(fine, RkhsConfig(1), 1e-8);
  const Eigen::VectorXd identity = sample(fine, [](double t) { return t; });
  CHECK(system.transform(identity).squaredNorm() ==
        doctest::Approx(1.0).epsilon(1e-3));

  // Rows interface.
  Eigen::MatrixXd rows(3, p);
  const SplineSystem sys40(grid, RkhsConfig(1), 1e-4);
  for (int i = 0; i < 3; ++i) rows.row(i) = random_vector(rng, p).transpose();
  const Eigen::MatrixXd transformed = sys40.transform_rows(rows);
  for (int i = 0; i < 3; ++i) {
    CHECK((transformed.row(i).transpose() -
           sys40.transform(rows.row(i).transpose()))
              .cwiseAbs()
              .maxCoeff() <= 1e-12);
  }
}

TEST_CASE("leave-one-out criterion") {
  const SamplingGrid grid = SamplingGrid::uniform(20);
  const SplineSystem system(grid, RkhsConfig(2), 1e-2);

  // Polynomials of degree < m are reproduced: zero criterion.
  Eigen::MatrixXd polys(3, 20);
  polys.row(0) = sample(grid, [](double t) { return 1.0 + t; }).transpose();
  polys.row(1) = sample(grid, [](double t) { return -2.0 * t; }).transpose();
  polys.row(2) = Eigen::RowVectorXd::Constant(20, 3.0);
  CHECK(system.loo_criterion(polys) <= 1e-16);

  Rng rng(71);
  Eigen::MatrixXd random_rows(4, 20);
  for (int i = 0; i < 4; ++i) {
    random_rows.row(i) = random_vector(rng, 20).transpose();
  }
  const double criterion = system.loo_criterion(random_rows);
  CHECK(criterion >= 0.0);

  Eigen::MatrixXd doubled(8, 20);
  doubled << random_rows, random_rows;
  CHECK(system.loo_criterion(doubled) ==
        doctest::Approx(2.0 * criterion).epsilon(1e-12));

  // Near-interpolating smoother trips the degeneracy guard.
  const SamplingGrid small = positive_uniform(5);
  const SplineSystem degenerate(small, RkhsConfig(1), 1e-16);
  CHECK_THROWS_AS(degenerate.loo_criterion(random_rows.leftCols(5)),
                  DegenerateSmootherError);
}

TEST_CASE("select_lambda: argmin, ties, degeneracy, noise monotonicity") {
  const SamplingGrid grid = positive_uniform(50);

  SUBCASE("single candidate is returned unconditionally") {
    Eigen::MatrixXd rows(2, 50);
    rows.row(0) = sample(grid, [](double t) { return t; }).transpose();
    rows.row(1) = sample(grid, [](double t) { return 1 - t; }).transpose();
    const LambdaSelection selection =
        select_lambda(grid, RkhsConfig(1), rows, {0.25});
    CHECK(selection.lambda == 0.25);
    CHECK(selection.curve.size() == 1);
  }

  SUBCASE("noiseless smooth data prefers small lambda") {
    SynthSpec spec{.n = 12,
                   .grid = grid,
                   .harmonics = 2,
                   .rule = TargetRule::kMean,
                   .noise_sd = 0.0,
                   .seed = 15};
    const FunctionalDataset clean = synthesize(spec);
    std::vector<double> candidates;
    for (int i = 0; i <= 10; ++i) candidates.push_back(std::pow(10.0, -8.0 + i));
    const LambdaSelection on_clean =
        select_lambda(grid, RkhsConfig(2), clean.rows, candidates);
    CHECK(on_clean.lambda <= candidates[5]);  // at or below the median

    const FunctionalDataset noisy = add_noise(clean, 0.2, 3);
    const LambdaSelection on_noisy =
        select_lambda(grid, RkhsConfig(2), noisy.rows, candidates);
    CHECK(on_noisy.lambda > on_clean.lambda);
  }

  SUBCASE("exact ties break toward the larger lambda") {
    const Eigen::MatrixXd zeros = Eigen::MatrixXd::Zero(3, 50);
    const LambdaSelection selection =
        select_lambda(grid, RkhsConfig(1), zeros, {1e-3, 1e-2, 1e-1});
    CHECK(selection.lambda == 1e-1);
  }

  SUBCASE("all-degenerate candidate sets raise") {
    const SamplingGrid small = positive_uniform(5);
    Eigen::MatrixXd rows = Eigen::MatrixXd::Random(3, 5);
    CHECK_THROWS_AS(
        select_lambda(small, RkhsConfig(1), rows, {1e-18, 1e-17}),
        DegenerateSmootherError);
    const LambdaSelection mixed =
        select_lambda(small, RkhsConfig(1), rows, {1e-18, 0.5});
    CHECK(mixed.lambda == 0.5);
    CHECK(mixed.curve.front().degenerate);
  }

  SUBCASE("candidates must be positive") {
    Eigen::MatrixXd rows = Eigen::MatrixXd::Random(2, 50);
    CHECK_THROWS_AS(select_lambda(grid, RkhsConfig(1), rows, {}),
                    ArgumentError);
    CHECK_THROWS_AS(select_lambda(grid, RkhsConfig(1), rows, {0.0, 0.1}),
                    ArgumentError);
  }
}

TEST_CASE("approximation rate on sin(2 pi t)") {
  for (int m : {1, 2}) {
    std::vector<double> log_size, log_error;
    for (std::size_t p : {20, 40, 80}) {
      const SamplingGrid grid = positive_uniform(p);
      const double lambda = std::pow(static_cast<double>(p), -2.0 * m);
      const SplineSystem system(grid, RkhsConfig(m), lambda);
      const SplineFit fit = system.fit(sample(grid, [](double t) {
        return std::sin(2 * std::numbers::pi * t);
      }));
      const double error2 = oracles::piecewise_quadrature(
          [&](double t) {
            const double e =
                fit.value(t) - std::sin(2 * std::numbers::pi * t);
            return e * e;
          },
          grid.points(), 4);
      log_size.push_back(std::log(static_cast<double>(p)));
      log_error.push_back(0.5 * std::log(error2));
    }
    // Least-squares slope of log error against log grid size.
    const double n = static_cast<double>(log_size.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < log_size.size(); ++i) {
      sx += log_size[i];
      sy += log_error[i];
      sxx += log_size[i] * log_size[i];
      sxy += log_size[i] * log_error[i];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    CHECK(slope <= -m + 0.3);
  }
}

TEST_CASE("construction rejects invalid arguments") {
  CHECK_THROWS_AS(SplineSystem(SamplingGrid({0.4}), RkhsConfig(2), 1e-3),
                  GridError);
  CHECK_THROWS_AS(SplineSystem(positive_uniform(5), RkhsConfig(1), -1.0),
                  ArgumentError);
  CHECK_THROWS_AS(RkhsConfig(3), ArgumentError);
}
