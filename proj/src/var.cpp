#include "treevar/var.hpp"

#include <Eigen/Eigenvalues>

namespace treevar {

Matrix TransitionStack::stacked() const {
  const int dd = d();
  Matrix cbar(p * dd, p);
  for (int k = 0; k < dd; ++k) cbar.block(k * p, 0, p, p) = coef[k].transpose();
  return cbar;
}

TransitionStack TransitionStack::from_stacked(const Matrix& cbar, int d) {
  if (d <= 0 || cbar.rows() != d * cbar.cols())
    throw infeasible_error("stacked coefficient matrix must be (p*d) x p");
  const int p = static_cast<int>(cbar.cols());
  TransitionStack c(d, p);
  for (int k = 0; k < d; ++k) c.coef[k] = cbar.block(k * p, 0, p, p).transpose();
  return c;
}

StabilityReport check_stability_sufficient(const TransitionStack& c) {
  const int p = c.p, d = c.d();
  if (d <= 0 || p <= 0) throw infeasible_error("empty transition stack");
  StabilityReport rep;
  rep.g0 = -0.4 - 0.61 / static_cast<double>(d);
  rep.bound = 1.0 / std::sqrt(static_cast<double>(d));
  Matrix a_star = Matrix::Zero(p, p), a_dstar = Matrix::Zero(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) {
      double s1 = 0.0, s2 = 0.0;
      for (int k = 0; k < d; ++k) {
        const double cij = c.coef[k](i, j), cji = c.coef[k](j, i);
        const double sym = 0.5 * (cij + cji);
        const double g = 0.5 * (cij + rep.g0 * cji);
        s1 += sym * sym;
        s2 += g * g + (1.0 - rep.g0 * rep.g0) * 0.25 * cji * cji;
      }
      a_star(i, j) = std::sqrt(s1);
      a_dstar(i, j) = std::sqrt(s2);
    }
  rep.degrees_star = a_star.rowwise().sum();
  rep.degrees_dstar = a_dstar.rowwise().sum();
  rep.pass = rep.degrees_star.maxCoeff() < rep.bound && rep.degrees_dstar.maxCoeff() < rep.bound;
  return rep;
}

double companion_spectral_radius(const TransitionStack& c) {
  const int p = c.p, d = c.d();
  if (d <= 0 || p <= 0) throw infeasible_error("empty transition stack");
  Matrix comp = Matrix::Zero(p * d, p * d);
  for (int k = 0; k < d; ++k) comp.block(0, k * p, p, p) = c.coef[k];
  if (d > 1) comp.block(p, 0, p * (d - 1), p * (d - 1)).setIdentity();
  Eigen::EigenSolver<Matrix> es(comp, /*computeEigenvectors=*/false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

namespace {

Matrix chol_lower(const Matrix& cov) {
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success)
    throw numerical_error("noise covariance is not symmetric positive definite");
  return llt.matrixL();
}

void step_var(const TransitionStack& c, const Matrix& chol, std::vector<Vector>& lagbuf,
              RngStream& rng, Vector& out) {
  const int p = c.p, d = c.d();
  Vector z(p);
  for (int i = 0; i < p; ++i) z[i] = rng.normal();
  out = chol * z;
  for (int k = 0; k < d; ++k) out.noalias() += c.coef[k] * lagbuf[k];
  for (int k = d - 1; k > 0; --k) lagbuf[k] = lagbuf[k - 1];
  lagbuf[0] = out;
}

}  // namespace

TimeSeries simulate_var(const TransitionStack& c, const Matrix& noise_cov, int T,
                        std::uint64_t seed, int burnin) {
  const int p = c.p, d = c.d();
  if (T <= d) throw infeasible_error("simulate_var: T must exceed the lag order");
  if (noise_cov.rows() != p || noise_cov.cols() != p)
    throw infeasible_error("simulate_var: noise covariance dimension mismatch");
  const double radius = companion_spectral_radius(c);
  if (radius >= 1.0)
    throw infeasible_error("simulate_var: companion spectral radius " + std::to_string(radius) +
                           " >= 1 (explosive system)");
  const Matrix chol = chol_lower(noise_cov);
  RngStream rng(seed);
  std::vector<Vector> lagbuf(d, Vector::Zero(p));
  Vector y(p);
  for (int t = 0; t < burnin; ++t) step_var(c, chol, lagbuf, rng, y);
  TimeSeries out;
  out.data.resize(T, p);
  for (int t = 0; t < T; ++t) {
    step_var(c, chol, lagbuf, rng, y);
    out.data.row(t) = y.transpose();
  }
  return out;
}

Matrix simulate_var_from(const TransitionStack& c, const Matrix& noise_cov,
                         const Matrix& history, int H, std::uint64_t seed) {
  const int p = c.p, d = c.d();
  if (history.rows() < d || history.cols() != p)
    throw infeasible_error("simulate_var_from: history must hold at least d rows of width p");
  if (H <= 0) throw infeasible_error("simulate_var_from: horizon must be positive");
  const Matrix chol = chol_lower(noise_cov);
  RngStream rng(seed);
  std::vector<Vector> lagbuf(d);
  const int Th = static_cast<int>(history.rows());
  for (int k = 0; k < d; ++k) lagbuf[k] = history.row(Th - 1 - k).transpose();
  Matrix out(H, p);
  Vector y(p);
  for (int t = 0; t < H; ++t) {
    step_var(c, chol, lagbuf, rng, y);
    out.row(t) = y.transpose();
  }
  return out;
}

LaggedDesign build_lagged_design(const Matrix& series, int d, int drop_head) {
  const int T = static_cast<int>(series.rows()), p = static_cast<int>(series.cols());
  if (d <= 0) throw infeasible_error("lag order must be positive");
  if (drop_head < 0) throw infeasible_error("drop_head must be nonnegative");
  const int first = d + drop_head;  // first usable response index (0-based)
  if (T <= first) throw infeasible_error("build_lagged_design: series too short for lag order");
  const int N = T - first;
  LaggedDesign out;
  out.d = d;
  out.p = p;
  out.Y.resize(N, p);
  out.X.resize(N, p * d);
  for (int t = 0; t < N; ++t) {
    out.Y.row(t) = series.row(first + t);
    for (int k = 0; k < d; ++k) out.X.block(t, k * p, 1, p) = series.row(first + t - 1 - k);
  }
  return out;
}

TimeSeries standardize(const Matrix& series) {
  const int T = static_cast<int>(series.rows()), p = static_cast<int>(series.cols());
  if (T < 2) throw infeasible_error("standardize: need at least two observations");
  TimeSeries out;
  out.center = series.colwise().mean();
  out.scale.resize(p);
  out.data.resize(T, p);
  for (int j = 0; j < p; ++j) {
    const Vector centered = series.col(j).array() - out.center[j];
    const double var = centered.squaredNorm() / (T - 1);
    if (var <= 0.0)
      throw infeasible_error("standardize: column " + std::to_string(j) + " is constant");
    out.scale[j] = std::sqrt(var);
    out.data.col(j) = centered / out.scale[j];
  }
  out.standardized = true;
  return out;
}

TransitionStack unstandardize_coefficients(const TransitionStack& c, const Vector& scale) {
  if (scale.size() != c.p) throw infeasible_error("scale vector dimension mismatch");
  TransitionStack out = c;
  for (auto& m : out.coef)
    for (int i = 0; i < c.p; ++i)
      for (int j = 0; j < c.p; ++j) m(i, j) *= scale[i] / scale[j];
  return out;
}

}  // namespace treevar
