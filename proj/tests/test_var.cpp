#include "doctest.h"

#include "treevar/var.hpp"

#include <cmath>

using namespace treevar;

namespace {

TransitionStack random_stack(int p, int d, double scale, std::uint64_t seed) {
  RngStream rng(seed);
  TransitionStack c(d, p);
  for (int k = 0; k < d; ++k) c.coef[k] = scale * rng.normal_matrix(p, p);
  return c;
}

}  // namespace

TEST_CASE("stacked layout round-trips and matches the lag blocks") {
  const TransitionStack c = random_stack(3, 2, 0.3, 1);
  const Matrix cbar = c.stacked();
  REQUIRE(cbar.rows() == 6);
  REQUIRE(cbar.cols() == 3);
  // lag-k block is the transposed coefficient matrix, so Y ~ X * stacked()
  CHECK((cbar.block(0, 0, 3, 3) - c.coef[0].transpose()).norm() == 0.0);
  CHECK((cbar.block(3, 0, 3, 3) - c.coef[1].transpose()).norm() == 0.0);
  const TransitionStack back = TransitionStack::from_stacked(cbar, 2);
  for (int k = 0; k < 2; ++k) CHECK((back.coef[k] - c.coef[k]).norm() == 0.0);
  CHECK_THROWS_AS(TransitionStack::from_stacked(cbar, 4), Error);
}

TEST_CASE("companion spectral radius: scalar AR(2) oracle") {
  // x_t = 0.5 x_{t-1} + 0.3 x_{t-2}: companion eigenvalue (0.5 + sqrt(0.25 + 1.2)) / 2
  TransitionStack c(2, 1);
  c.coef[0](0, 0) = 0.5;
  c.coef[1](0, 0) = 0.3;
  CHECK(companion_spectral_radius(c) == doctest::Approx(0.8520797289396148).epsilon(1e-12));
  // d = 1 reduces to the spectral radius of the matrix itself
  TransitionStack c1(1, 2);
  c1.coef[0] << 0.0, 0.9, 0.0, 0.0;
  CHECK(companion_spectral_radius(c1) == doctest::Approx(0.0).epsilon(1e-12));
  c1.coef[0] << 0.7, 0.0, 0.0, -0.2;
  CHECK(companion_spectral_radius(c1) == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("sufficient degree bound implies a stable companion matrix") {
  // rejection-sample stacks through the bound; every survivor must be stable
  int accepted = 0;
  for (std::uint64_t seed = 0; accepted < 60 && seed < 4000; ++seed) {
    const TransitionStack c = random_stack(4, 2, 0.12, seed);
    const StabilityReport rep = check_stability_sufficient(c);
    REQUIRE(rep.degrees_star.size() == 4);
    CHECK(rep.bound == doctest::Approx(1.0 / std::sqrt(2.0)));
    if (!rep.pass) continue;
    ++accepted;
    CHECK(companion_spectral_radius(c) < 1.0);
    CHECK(rep.margin() > 0.0);
  }
  CHECK(accepted == 60);
}

TEST_CASE("degree bound is conservative, not necessary") {
  // a stable system the row-degree test rejects: one large off-diagonal
  // entry pushes the symmetrized degree past 1/sqrt(d) while the matrix
  // stays nilpotent (radius 0)
  TransitionStack c(1, 2);
  c.coef[0] << 0.0, 2.5, 0.0, 0.0;
  CHECK(companion_spectral_radius(c) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK_FALSE(check_stability_sufficient(c).pass);
}

TEST_CASE("lagged design aligns responses with their lag blocks") {
  Matrix series(5, 2);
  series << 1, 2, 3, 4, 5, 6, 7, 8, 9, 10;
  const LaggedDesign des = build_lagged_design(series, 2);
  REQUIRE(des.N() == 3);
  REQUIRE(des.X.cols() == 4);
  CHECK((des.Y.row(0) - series.row(2)).norm() == 0.0);
  // lag-1 then lag-2 values, most recent first
  Matrix x0(1, 4);
  x0 << 3, 4, 1, 2;
  CHECK((des.X.row(0) - x0).norm() == 0.0);
  CHECK((des.Y.row(2) - series.row(4)).norm() == 0.0);
  const LaggedDesign dropped = build_lagged_design(series, 2, 1);
  REQUIRE(dropped.N() == 2);
  CHECK((dropped.Y.row(0) - series.row(3)).norm() == 0.0);
  CHECK_THROWS_AS(build_lagged_design(series, 5), Error);
}

TEST_CASE("hand-iterated dynamics satisfy Y = X stacked exactly") {
  const TransitionStack c = random_stack(3, 2, 0.15, 3);
  RngStream rng(31);
  Matrix series(22, 3);
  series.topRows(2) = rng.normal_matrix(2, 3);
  for (int t = 2; t < 22; ++t)
    series.row(t) = (c.coef[0] * series.row(t - 1).transpose() +
                     c.coef[1] * series.row(t - 2).transpose())
                        .transpose();
  const LaggedDesign des = build_lagged_design(series, 2);
  CHECK((des.Y - des.X * c.stacked()).norm() < 1e-13);
}

TEST_CASE("simulation is seed-deterministic and rejects explosive systems") {
  const TransitionStack c = random_stack(3, 1, 0.2, 5);
  const Matrix cov = Matrix::Identity(3, 3);
  const TimeSeries a = simulate_var(c, cov, 30, 9), b = simulate_var(c, cov, 30, 9);
  CHECK((a.data - b.data).norm() == 0.0);
  const TimeSeries other = simulate_var(c, cov, 30, 10);
  CHECK((a.data - other.data).norm() > 0.0);

  TransitionStack bad(1, 2);
  bad.coef[0] << 1.1, 0.0, 0.0, 1.1;
  CHECK_THROWS_AS(simulate_var(bad, Matrix::Identity(2, 2), 30, 1), Error);
}

TEST_CASE("forward simulation continues from the history tail") {
  const TransitionStack c = random_stack(2, 2, 0.15, 8);
  const Matrix cov = 1e-30 * Matrix::Identity(2, 2);  // effectively deterministic
  RngStream rng(44);
  const Matrix history = rng.normal_matrix(20, 2);
  const Matrix fut = simulate_var_from(c, cov, history, 4, 99);
  // with negligible noise the first step is the VAR map on the last two rows
  const Vector expect =
      c.coef[0] * history.row(19).transpose() + c.coef[1] * history.row(18).transpose();
  CHECK((fut.row(0).transpose() - expect).norm() < 1e-12);
  const Matrix again = simulate_var_from(c, cov, history, 4, 99);
  CHECK((fut - again).norm() == 0.0);
}

TEST_CASE("standardize centers, scales, and back-transforms coefficients") {
  RngStream rng(13);
  Matrix series = rng.normal_matrix(60, 3);
  series.col(1) *= 5.0;
  series.col(2).array() += 10.0;
  const TimeSeries std_series = standardize(series);
  for (int j = 0; j < 3; ++j) {
    CHECK(std::abs(std_series.data.col(j).mean()) < 1e-12);
    const double var = (std_series.data.col(j).array() - std_series.data.col(j).mean())
                           .matrix()
                           .squaredNorm() /
                       59.0;
    CHECK(var == doctest::Approx(1.0).epsilon(1e-12));
  }
  // a coefficient matrix fitted on the standardized scale maps back by scale_i / scale_j
  TransitionStack c = random_stack(3, 1, 0.2, 2);
  const TransitionStack raw = unstandardize_coefficients(c, std_series.scale);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      CHECK(raw.coef[0](i, j) ==
            doctest::Approx(c.coef[0](i, j) * std_series.scale[i] / std_series.scale[j]));
  Matrix constant = Matrix::Ones(10, 2);
  CHECK_THROWS_AS(standardize(constant), Error);
}
