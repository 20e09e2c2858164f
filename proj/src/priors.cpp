#include "treevar/priors.hpp"

namespace treevar {

void HyperParams::validate() const {
  if (!(alpha_eta > 0) || !(a_r > 0) || !(r_decay > 0) || !(alpha_s > 0) || !(a_u > 0) ||
      !(b_u > 0) || !(a_sigma > 0) || !(b_sigma > 0))
    throw infeasible_error("hyperparameters must be positive");
  if (!(tau > 0) || tau > 1.0) throw infeasible_error("tau must lie in (0,1]");
}

Matrix combine_tree_scale(const std::vector<EdgeMarginals>& margs, const Vector& s) {
  if (margs.empty() || margs.size() != static_cast<size_t>(s.size()))
    throw infeasible_error("combine_tree_scale: need one marginal grid per tree weight");
  const int p = margs[0].p;
  Matrix scale = Matrix::Zero(p, p);
  for (int l = 0; l < s.size(); ++l) scale += s[l] * margs[l].probs;
  scale.diagonal().setOnes();
  return scale;
}

double gdp_log_density(double x, double scale, double alpha) {
  if (!(scale > 0.0)) throw infeasible_error("gdp_log_density: scale must be positive");
  if (!(alpha > 0.0)) throw infeasible_error("gdp_log_density: alpha must be positive");
  return std::log(alpha / (2.0 * scale)) - (alpha + 1.0) * std::log1p(std::abs(x) / scale);
}

namespace {

double log_inv_gamma(double x, double a, double b) {
  return a * std::log(b) - std::lgamma(a) - (a + 1.0) * std::log(x) - b / x;
}

double log_beta_density(double x, double a, double b) {
  return std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + (a - 1.0) * std::log(x) +
         (b - 1.0) * std::log1p(-x);
}

constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // log sqrt(2 pi)

}  // namespace

double log_prior(const ParamState& state, const HyperParams& hyper,
                 const std::vector<EdgeMarginals>& margs) {
  hyper.validate();
  const int p = state.p(), d = state.d(), m = state.m();
  if (static_cast<int>(margs.size()) != m)
    throw infeasible_error("log_prior: marginal grids do not match tree count");
  const Matrix tscale = combine_tree_scale(margs, state.s);
  double lp = 0.0;
  for (int k = 0; k < d; ++k)
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j) {
        const double sc = state.r[k] * std::max(tscale(i, j), kTreeScaleFloor);
        lp += gdp_log_density(state.c.coef[k](i, j), sc, hyper.alpha_eta);
      }
  // Dirichlet(alpha_s) over tree weights
  lp += std::lgamma(hyper.alpha_s * m) - m * std::lgamma(hyper.alpha_s);
  for (int l = 0; l < m; ++l) lp += (hyper.alpha_s - 1.0) * std::log(state.s[l]);
  for (int k = 0; k < d; ++k) lp += log_inv_gamma(state.r[k], hyper.a_r, hyper.b_r(k));
  for (int l = 0; l < m; ++l)
    for (int i = 0; i < p; ++i)
      for (int j = i + 1; j < p; ++j)
        lp += log_beta_density(state.u[l](i, j), hyper.a_u, hyper.b_u);
  lp += -0.5 * state.w_fac.squaredNorm() - state.w_fac.size() * kLogSqrt2Pi;
  lp += -0.5 * state.z_fac.squaredNorm() - state.z_fac.size() * kLogSqrt2Pi;
  lp += log_inv_gamma(state.sigma2, hyper.a_sigma, hyper.b_sigma);
  return lp;
}

PriorDraw sample_prior(const HyperParams& hyper, int p, int d, int m, int p_star, int n_rows,
                       std::uint64_t seed) {
  hyper.validate();
  if (p < 2 || d < 1 || m < 1 || m > p / 2 || p_star < 0 || p_star >= p || n_rows < 0)
    throw infeasible_error("sample_prior: invalid dimensions");
  RngStream rng(seed);
  PriorDraw out;
  ParamState& st = out.state;
  st.c = TransitionStack(d, p);
  st.u.resize(m);
  for (int l = 0; l < m; ++l) {
    st.u[l] = Matrix::Zero(p, p);
    for (int i = 0; i < p; ++i)
      for (int j = i + 1; j < p; ++j) st.u[l](i, j) = st.u[l](j, i) = rng.beta(hyper.a_u, hyper.b_u);
    out.trees.push_back(max_spanning_tree(WeightedGraph(st.u[l])));
  }
  st.s = rng.dirichlet(hyper.alpha_s, m);
  st.r.resize(d);
  for (int k = 0; k < d; ++k) st.r[k] = rng.inv_gamma(hyper.a_r, hyper.b_r(k));

  // discrete-tree composite scale: sum_l s_l A^l off the diagonal, 1 on it
  Matrix tscale = Matrix::Zero(p, p);
  for (int l = 0; l < m; ++l) tscale += st.s[l] * out.trees[l].adjacency();
  tscale.diagonal().setOnes();

  out.scales.r = st.r;
  out.scales.s = st.s;
  out.scales.tree_scale = tscale;
  out.scales.eta.assign(d, Matrix::Zero(p, p));
  for (int k = 0; k < d; ++k)
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j) {
        const double lambda = rng.gamma(hyper.alpha_eta);
        const double eta = rng.exponential(0.5 * lambda * lambda);
        out.scales.eta[k](i, j) = eta;
        const double sd = std::sqrt(eta) * st.r[k] * tscale(i, j);
        st.c.coef[k](i, j) = sd * rng.normal();  // exact zero off the tree union
      }
  st.w_fac = rng.normal_matrix(p, p_star);
  st.z_fac = rng.normal_matrix(n_rows, p_star);
  st.sigma2 = rng.inv_gamma(hyper.a_sigma, hyper.b_sigma);
  return out;
}

}  // namespace treevar
