#include "doctest.h"

#include "treevar/posterior.hpp"
#include "treevar/sampler.hpp"

#include <cmath>

using namespace treevar;

namespace {

ModelDims make_dims(int p, int d, int m, int p_star, int n) {
  ModelDims dims;
  dims.p = p;
  dims.d = d;
  dims.m = m;
  dims.p_star = p_star;
  dims.n = n;
  return dims;
}

LaggedDesign random_design(int p, int d, int n, std::uint64_t seed) {
  RngStream rng(seed);
  LaggedDesign design;
  design.p = p;
  design.d = d;
  design.X = rng.normal_matrix(n, p * d);
  design.Y = rng.normal_matrix(n, p);
  return design;
}

ParamState random_state(int p, int d, int m, int p_star, int n, std::uint64_t seed) {
  return sample_prior(HyperParams{}, p, d, m, p_star, n, seed).state;
}

// Everything O(1) and away from boundaries, so finite differences at steps
// down to 1e-6 are trustworthy (prior draws park coefficients at the floored
// shrinkage scale, where a symmetric difference straddles the |x| cusp).
ParamState generic_state(int p, int d, int m, int p_star, int n, std::uint64_t seed) {
  RngStream rng(seed);
  ParamState st;
  st.c = TransitionStack(d, p);
  for (int k = 0; k < d; ++k) st.c.coef[k] = 0.5 * rng.normal_matrix(p, p);
  st.r.resize(d);
  for (int k = 0; k < d; ++k) st.r[k] = 0.2 + rng.uniform();
  st.s = rng.dirichlet(5.0, m);
  st.u.assign(m, Matrix::Zero(p, p));
  for (int l = 0; l < m; ++l)
    for (int i = 0; i < p; ++i)
      for (int j = i + 1; j < p; ++j) st.u[l](i, j) = st.u[l](j, i) = 0.15 + 0.7 * rng.uniform();
  st.w_fac = 0.5 * rng.normal_matrix(p, p_star);
  st.z_fac = 0.5 * rng.normal_matrix(n, p_star);
  st.sigma2 = 0.5 + rng.uniform();
  return st;
}

}  // namespace

TEST_CASE("coordinate layout covers every block exactly once") {
  const ModelDims dims = make_dims(4, 2, 3, 2, 7);
  CHECK(dims.off_r() == 32);
  CHECK(dims.off_s() == 34);
  CHECK(dims.off_u() == 36);
  CHECK(dims.off_w() == 36 + 3 * 6);
  CHECK(dims.off_z() == dims.off_w() + 8);
  CHECK(dims.off_sigma() == dims.off_z() + 14);
  CHECK(dims.total() == dims.off_sigma() + 1);
  // c_index walks the column-major lag blocks
  CHECK(dims.c_index(0, 0, 0) == 0);
  CHECK(dims.c_index(0, 1, 0) == 1);
  CHECK(dims.c_index(0, 0, 1) == 4);
  CHECK(dims.c_index(1, 0, 0) == 16);
  // u_index is row-major over i < j
  CHECK(dims.u_index(0, 0, 1) == dims.off_u());
  CHECK(dims.u_index(0, 0, 3) == dims.off_u() + 2);
  CHECK(dims.u_index(0, 1, 2) == dims.off_u() + 3);
  CHECK(dims.u_index(0, 2, 3) == dims.off_u() + 5);
  CHECK(dims.u_index(1, 0, 1) == dims.off_u() + 6);
}

TEST_CASE("unconstrained map round-trips random states") {
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    const ParamState state = random_state(4, 2, 2, 2, 9, seed);
    const Vector z = to_unconstrained(state);
    const ModelDims dims = make_dims(4, 2, 2, 2, 9);
    REQUIRE(z.size() == dims.total());
    const ParamState back = from_unconstrained(z, dims);
    for (int k = 0; k < 2; ++k)
      CHECK((back.c.coef[k] - state.c.coef[k]).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((back.r - state.r).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((back.s - state.s).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(back.s.sum() == doctest::Approx(1.0).epsilon(1e-12));
    for (int l = 0; l < 2; ++l)
      CHECK((back.u[l] - state.u[l]).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((back.w_fac - state.w_fac).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((back.z_fac - state.z_fac).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(back.sigma2 == doctest::Approx(state.sigma2).epsilon(1e-12));
  }
}

TEST_CASE("transform log-Jacobian matches the blockwise closed forms") {
  const ModelDims dims = make_dims(3, 1, 2, 1, 5);
  RngStream rng(4);
  Vector z(dims.total());
  for (int i = 0; i < z.size(); ++i) z[i] = rng.normal();
  const ParamState state = from_unconstrained(z, dims);

  double expect = 0.0;
  for (int k = 0; k < dims.d; ++k) expect += std::log(state.r[k]);      // exp
  for (int l = 0; l < dims.m; ++l) expect += std::log(state.s[l]);      // softmax (ref fixed)
  for (int l = 0; l < dims.m; ++l)
    for (int i = 0; i < dims.p; ++i)
      for (int j = i + 1; j < dims.p; ++j)
        expect += std::log(state.u[l](i, j)) + std::log1p(-state.u[l](i, j));  // logistic
  expect += std::log(state.sigma2);
  CHECK(transform_log_jacobian(z, dims) == doctest::Approx(expect).epsilon(1e-10));
}

TEST_CASE("potential equals the straight-line negative log joint") {
  const int p = 4, d = 1, m = 2, p_star = 1, n = 12;
  const LaggedDesign design = random_design(p, d, n, 21);
  const ParamState state = random_state(p, d, m, p_star, n, 22);
  const HyperParams hyper;

  std::vector<EdgeMarginals> margs;
  for (int l = 0; l < m; ++l) margs.push_back(tree_marginals(state.u[l], hyper.tau));

  const Matrix resid =
      design.Y - design.X * state.c.stacked() - state.z_fac * state.w_fac.transpose();
  const double n_half = 0.5 * n * p;
  double expect = n_half * std::log(2.0 * M_PI * state.sigma2) +
                  0.5 * resid.squaredNorm() / state.sigma2;
  expect -= log_prior(state, hyper, margs);

  CHECK(potential_energy(state, design, hyper) == doctest::Approx(expect).epsilon(1e-10));
}

TEST_CASE("analytic gradient matches central differences") {
  const int p = 4, d = 2, m = 2, p_star = 2, n = 20;
  const LaggedDesign design = random_design(p, d, n, 31);
  // the sharp default temperature is covered too; its third derivatives blow
  // up like 1/tau^3, so the difference step shrinks with tau to keep the
  // central-difference truncation below the tolerance
  for (double tau : {0.5, 0.01}) {
    HyperParams hyper;
    hyper.tau = tau;
    const Model model(design, hyper, m, p_star);
    for (std::uint64_t seed : {41u, 42u, 43u}) {
      const ParamState state = generic_state(p, d, m, p_star, n, seed);
      const Vector z0 = to_unconstrained(state);
      const Vector g = model.gradient(z0);
      REQUIRE(g.allFinite());

      const double h = tau < 0.1 ? 1e-6 : 1e-5;
      Vector z = z0;
      double max_rel = 0.0;
      const double g_norm = g.norm();
      for (int i = 0; i < z0.size(); ++i) {
        z[i] = z0[i] + h;
        const double up = model.potential(z);
        z[i] = z0[i] - h;
        const double dn = model.potential(z);
        z[i] = z0[i];
        const double fd = (up - dn) / (2.0 * h);
        max_rel = std::max(max_rel, std::abs(fd - g[i]) / (1.0 + g_norm));
      }
      CHECK(max_rel < 1e-5);
    }
  }
}

TEST_CASE("penalized-Jacobian mode gradient stays consistent") {
  const int p = 3, d = 1, m = 1, p_star = 0, n = 10;
  const LaggedDesign design = random_design(p, d, n, 51);
  HyperParams hyper;
  hyper.tau = 0.5;  // smooth regime: the penalty actually varies here
  const Model model(design, hyper, m, p_star, JacobianMode::pseudo);
  const ParamState state = generic_state(p, d, m, p_star, n, 52);
  const Vector z0 = to_unconstrained(state);
  const Vector g = model.gradient(z0);
  REQUIRE(g.allFinite());

  const double h = 1e-4;
  Vector z = z0;
  for (int i = 0; i < z0.size(); ++i) {
    z[i] = z0[i] + h;
    const double up = model.potential(z);
    z[i] = z0[i] - h;
    const double dn = model.potential(z);
    z[i] = z0[i];
    const double fd = (up - dn) / (2.0 * h);
    CHECK(std::abs(fd - g[i]) / (1.0 + g.norm()) < 5e-3);
  }
}

TEST_CASE("conditional coefficient posterior decouples under identity noise") {
  const int p = 3, d = 2, n = 25;
  const LaggedDesign design = random_design(p, d, n, 61);
  RngStream rng(62);
  Vector phi(p * d * p);
  for (int i = 0; i < phi.size(); ++i) phi[i] = 0.2 + rng.uniform();

  const CoefficientPosterior post =
      conditional_c_posterior(design, Matrix::Identity(p, p), phi);

  // with Sigma = I the columns of the stacked matrix are independent ridges
  const Matrix xtx = design.X.transpose() * design.X;
  for (int col = 0; col < p; ++col) {
    Matrix prec = xtx;
    for (int row = 0; row < p * d; ++row) prec(row, row) += 1.0 / phi[col * p * d + row];
    const Vector mean = prec.ldlt().solve(design.X.transpose() * design.Y.col(col));
    for (int row = 0; row < p * d; ++row)
      CHECK(post.mean[col * p * d + row] == doctest::Approx(mean[row]).epsilon(1e-8));
  }
}

TEST_CASE("scale-field vec ordering matches the stacked vec ordering") {
  const int p = 3, d = 2;
  RngStream rng(71);
  TransitionStack c(d, p);
  for (int k = 0; k < d; ++k) c.coef[k] = rng.normal_matrix(p, p);
  const Vector v = stacked_vec(c);
  const Matrix cbar = c.stacked();
  REQUIRE(v.size() == p * d * p);
  for (int i = 0; i < p; ++i)
    for (int k = 0; k < d; ++k)
      for (int j = 0; j < p; ++j)
        CHECK(v[i * p * d + k * p + j] == doctest::Approx(cbar(k * p + j, i)).epsilon(1e-14));
}

TEST_CASE("non-finite input: infinite potential, coordinate-named gradient error") {
  const int p = 3, d = 1, m = 1, p_star = 1, n = 8;
  const LaggedDesign design = random_design(p, d, n, 81);
  const Model model(design, HyperParams{}, m, p_star);
  Vector z = to_unconstrained(random_state(p, d, m, p_star, n, 82));
  z[2] = std::numeric_limits<double>::quiet_NaN();
  CHECK(std::isinf(model.potential(z)));
  CHECK_THROWS_WITH_AS(model.gradient(z), doctest::Contains("coordinate 2"), Error);
  // the sampler-facing wrapper converts the failure into a divergence marker
  const Target t = model_target(model);
  CHECK(!t.gradient(z).allFinite());
}
