#include "treevar/posterior.hpp"

#include <Eigen/SVD>

namespace treevar {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }

// log s_l for the additive-log-ratio coordinates with the last component as
// reference (implicit coordinate 0)
Vector alr_log_simplex(const Vector& z_alr) {
  const int m = static_cast<int>(z_alr.size()) + 1;
  double mx = 0.0;
  for (int l = 0; l < m - 1; ++l) mx = std::max(mx, z_alr[l]);
  double sum = std::exp(-mx);
  for (int l = 0; l < m - 1; ++l) sum += std::exp(z_alr[l] - mx);
  const double lse = mx + std::log(sum);
  Vector logs(m);
  for (int l = 0; l < m - 1; ++l) logs[l] = z_alr[l] - lse;
  logs[m - 1] = -lse;
  return logs;
}

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

Vector to_unconstrained(const ParamState& state) {
  ModelDims dims{state.p(), state.d(), state.m(), state.p_star(), state.n_rows()};
  Vector z(dims.total());
  for (int k = 0; k < dims.d; ++k)
    for (int j = 0; j < dims.p; ++j)
      for (int i = 0; i < dims.p; ++i) z[dims.c_index(k, i, j)] = state.c.coef[k](i, j);
  for (int k = 0; k < dims.d; ++k) z[dims.off_r() + k] = std::log(state.r[k]);
  for (int l = 0; l < dims.m - 1; ++l)
    z[dims.off_s() + l] = std::log(state.s[l]) - std::log(state.s[dims.m - 1]);
  for (int l = 0; l < dims.m; ++l)
    for (int i = 0; i < dims.p; ++i)
      for (int j = i + 1; j < dims.p; ++j) {
        const double u = state.u[l](i, j);
        z[dims.u_index(l, i, j)] = std::log(u) - std::log1p(-u);
      }
  Eigen::Map<Vector>(z.data() + dims.off_w(), dims.p * dims.p_star) =
      Eigen::Map<const Vector>(state.w_fac.data(), state.w_fac.size());
  Eigen::Map<Vector>(z.data() + dims.off_z(), dims.n * dims.p_star) =
      Eigen::Map<const Vector>(state.z_fac.data(), state.z_fac.size());
  z[dims.off_sigma()] = std::log(state.sigma2);
  return z;
}

ParamState from_unconstrained(const Vector& z, const ModelDims& dims) {
  if (z.size() != dims.total()) throw infeasible_error("from_unconstrained: dimension mismatch");
  ParamState st;
  st.c = TransitionStack(dims.d, dims.p);
  for (int k = 0; k < dims.d; ++k)
    for (int j = 0; j < dims.p; ++j)
      for (int i = 0; i < dims.p; ++i) st.c.coef[k](i, j) = z[dims.c_index(k, i, j)];
  st.r.resize(dims.d);
  for (int k = 0; k < dims.d; ++k) st.r[k] = std::exp(z[dims.off_r() + k]);
  const Vector logs = alr_log_simplex(z.segment(dims.off_s(), dims.m - 1));
  st.s = logs.array().exp();
  st.u.assign(dims.m, Matrix::Zero(dims.p, dims.p));
  for (int l = 0; l < dims.m; ++l)
    for (int i = 0; i < dims.p; ++i)
      for (int j = i + 1; j < dims.p; ++j)
        st.u[l](i, j) = st.u[l](j, i) = sigmoid(z[dims.u_index(l, i, j)]);
  st.w_fac.resize(dims.p, dims.p_star);
  Eigen::Map<Vector>(st.w_fac.data(), st.w_fac.size()) =
      z.segment(dims.off_w(), dims.p * dims.p_star);
  st.z_fac.resize(dims.n, dims.p_star);
  Eigen::Map<Vector>(st.z_fac.data(), st.z_fac.size()) =
      z.segment(dims.off_z(), dims.n * dims.p_star);
  st.sigma2 = std::exp(z[dims.off_sigma()]);
  return st;
}

double transform_log_jacobian(const Vector& z, const ModelDims& dims) {
  double lj = 0.0;
  for (int k = 0; k < dims.d; ++k) lj += z[dims.off_r() + k];
  lj += alr_log_simplex(z.segment(dims.off_s(), dims.m - 1)).sum();
  for (int i = dims.off_u(); i < dims.off_u() + dims.n_u(); ++i)
    lj += -softplus(z[i]) - softplus(-z[i]);  // log u + log(1-u)
  lj += z[dims.off_sigma()];
  return lj;
}

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

double jacobian_log_pdet(const Matrix& u, double tau) {
  const Matrix jac = marginals_jacobian(u, tau);
  Eigen::JacobiSVD<Matrix> svd(jac);
  double lp = 0.0;
  for (int i = 0; i < svd.singularValues().size(); ++i) {
    const double sv = svd.singularValues()[i];
    if (sv > 1e-10) lp += std::log(sv);
  }
  return lp;
}

struct PotentialParts {
  double value = 0.0;
  std::vector<MarginalsWorkspace> ws;
  Matrix tscale;        // floored composite scale
  Matrix tscale_raw;    // before the floor
  Matrix resid;         // Y - X Cbar - Z W^T
};

PotentialParts potential_parts(const ParamState& state, const LaggedDesign& design,
                               const HyperParams& hyper, JacobianMode mode, bool want_ws) {
  const int p = state.p(), m = state.m();
  const int n = design.N();
  PotentialParts out;
  std::vector<EdgeMarginals> margs(m);
  out.ws.resize(m);
  for (int l = 0; l < m; ++l) {
    out.ws[l] = tree_marginals_workspace(state.u[l], hyper.tau);
    margs[l] = out.ws[l].marg;
  }
  out.tscale_raw = combine_tree_scale(margs, state.s);
  out.tscale = out.tscale_raw.cwiseMax(kTreeScaleFloor);

  // exact negative log joint: Gaussian likelihood (with its constant) minus
  // the normalized prior, so the value is comparable across dimensions
  double u_val = 0.0;
  out.resid = design.Y - design.X * state.c.stacked();
  if (state.p_star() > 0) out.resid.noalias() -= state.z_fac * state.w_fac.transpose();
  const double n_half = 0.5 * n * p;
  u_val += n_half * (std::log(state.sigma2) + kLog2Pi);
  u_val += 0.5 * out.resid.squaredNorm() / state.sigma2;
  u_val -= log_prior(state, hyper, margs);
  if (mode == JacobianMode::pseudo)
    for (int l = 0; l < m; ++l) u_val -= jacobian_log_pdet(state.u[l], hyper.tau);
  out.value = std::isnan(u_val) ? kInf : u_val;
  if (!want_ws) out.ws.clear();
  return out;
}

}  // namespace

double potential_energy(const ParamState& state, const LaggedDesign& design,
                        const HyperParams& hyper, JacobianMode mode) {
  hyper.validate();
  if (design.p != state.p() || design.d != state.d() || design.N() != state.n_rows())
    throw infeasible_error("potential_energy: design does not match the state dimensions");
  return potential_parts(state, design, hyper, mode, /*want_ws=*/false).value;
}

Model::Model(LaggedDesign design, HyperParams hyper, int m, int p_star, JacobianMode mode)
    : design_(std::move(design)), hyper_(hyper), mode_(mode) {
  hyper_.validate();
  const int p = design_.p;
  if (m < 1 || m > p / 2) throw infeasible_error("Model: m must lie in [1, floor(p/2)]");
  if (p_star < 0 || p_star >= p) throw infeasible_error("Model: p_star must lie in [0, p-1]");
  if (design_.N() < 1) throw infeasible_error("Model: empty design");
  dims_ = ModelDims{p, design_.d, m, p_star, design_.N()};
}

double Model::potential(const Vector& z) const {
  try {
    const ParamState st = from_unconstrained(z, dims_);
    if (!st.r.allFinite() || !std::isfinite(st.sigma2)) return kInf;
    const double u = potential_parts(st, design_, hyper_, mode_, false).value;
    const double v = u - transform_log_jacobian(z, dims_);
    return std::isnan(v) ? kInf : v;
  } catch (const Error&) {
    return kInf;
  }
}

Vector Model::gradient(const Vector& z) const {
  const int p = dims_.p, d = dims_.d, m = dims_.m, n = dims_.n;
  for (int i = 0; i < z.size(); ++i)
    if (!std::isfinite(z[i]))
      throw numerical_error("gradient: non-finite input at coordinate " + std::to_string(i));
  Vector g(dims_.total());
  {
    const ParamState st = from_unconstrained(z, dims_);
    if (!st.r.allFinite() || !std::isfinite(st.sigma2))
      throw numerical_error("gradient: state overflow in the exp transform");
    PotentialParts parts = potential_parts(st, design_, hyper_, mode_, /*want_ws=*/true);
    if (!std::isfinite(parts.value))
      throw numerical_error("gradient: potential not finite at the evaluation point");
    g.setZero();
    const double alpha = hyper_.alpha_eta;
    const double sig2 = st.sigma2;

    // data block
    const Matrix gcbar = -(design_.X.transpose() * parts.resid) / sig2;  // (p d) x p
    for (int k = 0; k < d; ++k)
      for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) g[dims_.c_index(k, i, j)] = gcbar(k * p + j, i);
    if (dims_.p_star > 0) {
      const Matrix gw = -(parts.resid.transpose() * st.z_fac) / sig2 + st.w_fac;
      const Matrix gz = -(parts.resid * st.w_fac) / sig2 + st.z_fac;
      Eigen::Map<Vector>(g.data() + dims_.off_w(), gw.size()) =
          Eigen::Map<const Vector>(gw.data(), gw.size());
      Eigen::Map<Vector>(g.data() + dims_.off_z(), gz.size()) =
          Eigen::Map<const Vector>(gz.data(), gz.size());
    }
    const double gsig2 = -(0.5 * parts.resid.squaredNorm() + hyper_.b_sigma) / (sig2 * sig2) +
                         (0.5 * n * p + hyper_.a_sigma + 1.0) / sig2;
    g[dims_.off_sigma()] = gsig2 * sig2 - 1.0;

    // double-Pareto block: coefficients, lag scales, composite-scale sensitivity
    Matrix psi = Matrix::Zero(p, p);  // dU/d tscale_ij, accumulated over lags/orders
    Vector gr = Vector::Zero(d);
    for (int k = 0; k < d; ++k) {
      const double rk = st.r[k];
      for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) {
          const double sc = parts.tscale(i, j);
          const double ax = std::abs(st.c.coef[k](i, j));
          const double denom = rk * sc + ax;
          const double sgn = st.c.coef[k](i, j) > 0 ? 1.0 : (st.c.coef[k](i, j) < 0 ? -1.0 : 0.0);
          g[dims_.c_index(k, i, j)] += (alpha + 1.0) * sgn / denom;
          gr[k] += 1.0 / rk - (alpha + 1.0) * ax / (rk * denom);
          if (i != j) psi(i, j) += 1.0 / sc - (alpha + 1.0) * ax / (sc * denom);
        }
      gr[k] += (hyper_.a_r + 1.0) / rk - hyper_.b_r(k) / (rk * rk);
      g[dims_.off_r() + k] = gr[k] * rk - 1.0;
    }
    // kill the composite-scale sensitivity where the floor is active
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j)
        if (i == j || parts.tscale_raw(i, j) < kTreeScaleFloor) psi(i, j) = 0.0;
    Matrix psi_sym = psi + psi.transpose();  // unordered-pair sensitivity
    psi_sym.diagonal().setZero();

    // simplex block
    Vector gs(m);
    for (int l = 0; l < m; ++l) {
      double acc = -(hyper_.alpha_s - 1.0) / st.s[l];
      for (int i = 0; i < p; ++i)
        for (int j = i + 1; j < p; ++j) acc += psi_sym(i, j) * parts.ws[l].marg.probs(i, j);
      gs[l] = acc;
    }
    const double gs_dot_s = gs.dot(st.s);
    for (int h = 0; h < m - 1; ++h)
      g[dims_.off_s() + h] = st.s[h] * (gs[h] - gs_dot_s) - (1.0 - m * st.s[h]);

    // u grids: pull the marginal sensitivity back through the matrix-tree map
    for (int l = 0; l < m; ++l) {
      const Matrix gu = marginals_pullback(parts.ws[l], st.s[l] * psi_sym, st.u[l], hyper_.tau);
      for (int i = 0; i < p; ++i)
        for (int j = i + 1; j < p; ++j) {
          const double u = st.u[l](i, j);
          double gz = gu(i, j) * u * (1.0 - u);
          gz += -(hyper_.a_u - 1.0) * (1.0 - u) + (hyper_.b_u - 1.0) * u;  // Beta term
          gz -= 1.0 - 2.0 * u;                                             // log-Jacobian term
          g[dims_.u_index(l, i, j)] += gz;
        }
    }

    if (mode_ == JacobianMode::pseudo) {
      // central differences of the pseudo-determinant penalty, u-space step 1e-5
      const double h = 1e-5;
      for (int l = 0; l < m; ++l) {
        Matrix u = st.u[l];
        for (int i = 0; i < p; ++i)
          for (int j = i + 1; j < p; ++j) {
            const double u0 = u(i, j);
            const double lo = std::max(u0 - h, 1e-12), hi = std::min(u0 + h, 1.0 - 1e-12);
            u(i, j) = u(j, i) = hi;
            const double fp = -jacobian_log_pdet(u, hyper_.tau);
            u(i, j) = u(j, i) = lo;
            const double fm = -jacobian_log_pdet(u, hyper_.tau);
            u(i, j) = u(j, i) = u0;
            g[dims_.u_index(l, i, j)] += (fp - fm) / (hi - lo) * u0 * (1.0 - u0);
          }
      }
    }
    for (int i = 0; i < g.size(); ++i)
      if (!std::isfinite(g[i]))
        throw numerical_error("gradient: non-finite component at coordinate " +
                              std::to_string(i));
    return g;
  }
}

CoefficientPosterior conditional_c_posterior(const LaggedDesign& design, const Matrix& sigma_eps,
                                             const Vector& phi) {
  const int p = design.p, q = p * design.d;
  if (sigma_eps.rows() != p || sigma_eps.cols() != p)
    throw infeasible_error("conditional_c_posterior: noise covariance must be p x p");
  if (phi.size() != p * q) throw infeasible_error("conditional_c_posterior: phi must have p^2 d entries");
  if ((phi.array() <= 0.0).any())
    throw infeasible_error("conditional_c_posterior: phi must be positive");
  Eigen::LLT<Matrix> llt_sig(sigma_eps);
  if (llt_sig.info() != Eigen::Success)
    throw numerical_error("conditional_c_posterior: noise covariance not positive definite");
  const Matrix sig_inv = llt_sig.solve(Matrix::Identity(p, p));
  const Matrix xtx = design.X.transpose() * design.X;
  const Matrix xty = design.X.transpose() * design.Y;
  Matrix prec(p * q, p * q);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) prec.block(i * q, j * q, q, q) = sig_inv(i, j) * xtx;
  prec.diagonal() += phi.cwiseInverse();
  const Matrix rhs_mat = xty * sig_inv;  // q x p
  const Vector rhs = Eigen::Map<const Vector>(rhs_mat.data(), rhs_mat.size());
  Eigen::LLT<Matrix> llt_prec(prec);
  if (llt_prec.info() != Eigen::Success)
    throw numerical_error("conditional_c_posterior: precision not positive definite");
  CoefficientPosterior out;
  out.mean = llt_prec.solve(rhs);
  out.cov = llt_prec.solve(Matrix::Identity(p * q, p * q));
  return out;
}

Vector stacked_vec(const TransitionStack& c) {
  const Matrix cbar = c.stacked();
  return Eigen::Map<const Vector>(cbar.data(), cbar.size());
}

Vector scale_field_vec(const ScaleField& scales, int d, int p) {
  Vector phi(p * p * d);
  for (int i = 0; i < p; ++i)
    for (int k = 0; k < d; ++k)
      for (int j = 0; j < p; ++j) phi[i * p * d + k * p + j] = scales.phi(i, j, k);
  return phi;
}

}  // namespace treevar
