#include "doctest.h"

#include "treevar/sampler.hpp"

#include <cmath>
#include <limits>
#include <numeric>

using namespace treevar;

namespace {

Target gaussian_target(const Matrix& precision) {
  Target t;
  t.dim = static_cast<int>(precision.rows());
  t.potential = [precision](const Vector& z) { return 0.5 * z.dot(precision * z); };
  t.gradient = [precision](const Vector& z) { return Vector(precision * z); };
  return t;
}

}  // namespace

TEST_CASE("leapfrog is time-reversible on a smooth potential") {
  const int dim = 4;
  Matrix prec = Matrix::Identity(dim, dim);
  prec(0, 1) = prec(1, 0) = 0.4;
  const Target target = gaussian_target(prec);
  RngStream rng(3);
  Vector z(dim), v(dim);
  for (int i = 0; i < dim; ++i) {
    z[i] = rng.normal();
    v[i] = rng.normal();
  }
  const Vector mass_inv = Vector::Ones(dim);
  const LeapfrogResult fwd = leapfrog(target, z, v, 0.1, 20, mass_inv);
  REQUIRE(fwd.finite);
  const LeapfrogResult back = leapfrog(target, fwd.z, -fwd.v, 0.1, 20, mass_inv);
  REQUIRE(back.finite);
  CHECK((back.z - z).norm() < 1e-10);
  CHECK((back.v + v).norm() < 1e-10);
}

TEST_CASE("diagonal curvature estimate is exact on quadratics and clamped") {
  const int dim = 3;
  Vector a(dim);
  a << 4.0, 0.25, 1e9;
  Target t;
  t.dim = dim;
  t.potential = [a](const Vector& z) { return 0.5 * (a.array() * z.array().square()).sum(); };
  t.gradient = [a](const Vector& z) { return Vector(a.array() * z.array()); };
  const Vector mass = fisher_diag_mass(t, Vector::Zero(dim));
  CHECK(mass[0] == doctest::Approx(4.0).epsilon(1e-6));
  CHECK(mass[1] == doctest::Approx(0.25).epsilon(1e-6));
  CHECK(mass[2] == doctest::Approx(1e6).epsilon(1e-12));  // capped

  Target flat = t;
  flat.gradient = [a](const Vector& z) {
    Vector g = a.array() * z.array();
    g[1] = std::numeric_limits<double>::quiet_NaN();
    return g;
  };
  const Vector fallback = fisher_diag_mass(flat, Vector::Zero(dim));
  CHECK(fallback[1] == 1.0);  // non-finite column falls back to unit mass

  Target tiny = t;
  tiny.gradient = [](const Vector& z) { return Vector(1e-12 * z); };
  tiny.potential = [](const Vector& z) { return 0.5e-12 * z.squaredNorm(); };
  CHECK(fisher_diag_mass(tiny, Vector::Zero(dim))[0] == doctest::Approx(1e-6).epsilon(1e-12));
}

TEST_CASE("sampler reproduces a standard Gaussian") {
  const int dim = 5;
  const Target target = gaussian_target(Matrix::Identity(dim, dim));
  HmcConfig cfg;
  cfg.n_iter = 6000;
  cfg.n_warmup = 1000;
  cfg.leapfrog = 12;
  cfg.target_accept = 0.7;
  cfg.seed = 31;
  const FlatDraws out = hmc_sample(target, Vector::Zero(dim), cfg, Vector::Ones(dim));
  REQUIRE(out.draws.size() == 5000);
  Vector mean = Vector::Zero(dim), second = Vector::Zero(dim);
  for (const auto& z : out.draws) {
    mean += z;
    second += z.cwiseProduct(z);
  }
  mean /= out.draws.size();
  second /= out.draws.size();
  for (int i = 0; i < dim; ++i) {
    CHECK(std::abs(mean[i]) < 0.12);
    CHECK(second[i] - mean[i] * mean[i] == doctest::Approx(1.0).epsilon(0.15));
  }
  CHECK(out.accept_rate() > 0.4);
  CHECK(out.chains.size() == 1);
  CHECK(out.chains[0].eps > 0.0);
}

TEST_CASE("sampler tracks correlations of a non-diagonal target") {
  Matrix cov(2, 2);
  cov << 1.0, 0.8, 0.8, 1.0;
  const Target target = gaussian_target(cov.inverse());
  HmcConfig cfg;
  cfg.n_iter = 8000;
  cfg.n_warmup = 1500;
  cfg.leapfrog = 16;
  cfg.target_accept = 0.7;
  cfg.seed = 57;
  const FlatDraws out = hmc_sample(target, Vector::Zero(2), cfg, Vector::Ones(2));
  Matrix s = Matrix::Zero(2, 2);
  Vector mean = Vector::Zero(2);
  for (const auto& z : out.draws) mean += z;
  mean /= out.draws.size();
  for (const auto& z : out.draws) s += (z - mean) * (z - mean).transpose();
  s /= static_cast<double>(out.draws.size());
  CHECK(s(0, 0) == doctest::Approx(1.0).epsilon(0.2));
  CHECK(s(1, 1) == doctest::Approx(1.0).epsilon(0.2));
  CHECK(s(0, 1) == doctest::Approx(0.8).epsilon(0.25));
}

TEST_CASE("energy error shrinks quadratically in the step size") {
  // fixed step, no jitter: halving eps divides the mean |Delta H| by about 4
  Matrix prec = Matrix::Identity(5, 5);
  for (int i = 0; i < 5; ++i) prec(i, i) = 0.5 + i;
  const Target target = gaussian_target(prec);
  auto mean_energy_error = [&](double eps) {
    HmcConfig cfg;
    cfg.n_iter = 800;
    cfg.n_warmup = 200;
    cfg.leapfrog = 8;
    cfg.adapt = false;
    cfg.init_eps = eps;
    cfg.jitter = 0.0;
    cfg.seed = 5;
    const FlatDraws out = hmc_sample(target, Vector::Ones(5), cfg, prec.diagonal());
    const auto& tr = out.chains[0].energy_error_trace;
    return std::accumulate(tr.end() - 600, tr.end(), 0.0) / 600.0;
  };
  const double coarse = mean_energy_error(0.2);
  const double fine = mean_energy_error(0.1);
  CHECK(coarse / fine == doctest::Approx(4.0).epsilon(0.5));
}

TEST_CASE("unstable steps are flagged as divergences") {
  Matrix prec = Matrix::Identity(2, 2) * 1e6;  // stiff target
  const Target target = gaussian_target(prec);
  HmcConfig cfg;
  cfg.n_iter = 60;
  cfg.n_warmup = 0;  // keep the run alive past the warmup divergence guard
  cfg.leapfrog = 10;
  cfg.adapt = false;
  cfg.init_eps = 1.0;  // far beyond the stability limit 2/omega
  cfg.seed = 7;
  const FlatDraws out = hmc_sample(target, Vector::Constant(2, 1e-3), cfg, Vector::Ones(2));
  CHECK(out.chains[0].divergences > 0);
  CHECK(out.accept_rate() < 0.1);

  // with warmup present, a mostly-divergent warmup aborts the run
  HmcConfig guarded = cfg;
  guarded.n_warmup = 30;
  CHECK_THROWS_AS(hmc_sample(target, Vector::Constant(2, 1e-3), guarded, Vector::Ones(2)), Error);
}

TEST_CASE("step-size adaptation lands near the target acceptance") {
  const Target target = gaussian_target(Matrix::Identity(8, 8));
  HmcConfig cfg;
  cfg.n_iter = 3000;
  cfg.n_warmup = 1500;
  cfg.leapfrog = 10;
  cfg.target_accept = 0.7;
  cfg.seed = 11;
  const FlatDraws out = hmc_sample(target, Vector::Zero(8), cfg, Vector::Ones(8));
  CHECK(out.accept_rate() > 0.5);
  CHECK(out.accept_rate() < 0.9);
}

TEST_CASE("chains are seed-deterministic and concatenated in order") {
  const Target target = gaussian_target(Matrix::Identity(3, 3));
  HmcConfig cfg;
  cfg.n_iter = 200;
  cfg.n_warmup = 100;
  cfg.leapfrog = 8;
  cfg.thin = 2;
  cfg.n_chains = 2;
  cfg.seed = 99;
  const FlatDraws a = hmc_sample(target, Vector::Zero(3), cfg, Vector::Ones(3));
  const FlatDraws b = hmc_sample(target, Vector::Zero(3), cfg, Vector::Ones(3));
  REQUIRE(a.draws.size() == 100);  // 2 chains x 100 kept / thin 2
  REQUIRE(a.chains.size() == 2);
  bool same = true;
  for (size_t i = 0; i < a.draws.size(); ++i) same = same && (a.draws[i] - b.draws[i]).norm() == 0.0;
  CHECK(same);
  HmcConfig other = cfg;
  other.seed = 100;
  const FlatDraws c = hmc_sample(target, Vector::Zero(3), other, Vector::Ones(3));
  CHECK((a.draws.back() - c.draws.back()).norm() > 0.0);
}
