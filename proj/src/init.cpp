#include "treevar/init.hpp"

#include <algorithm>
#include <numeric>

namespace treevar {

namespace {

// symmetrized squared magnitudes across lags and both directions
Matrix edge_scores(const Matrix& v, int p, int d) {
  Matrix score = Matrix::Zero(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = i + 1; j < p; ++j) {
      double acc = 0.0;
      for (int k = 0; k < d; ++k) {
        const double a = v(k * p + j, i);  // effect of j on i
        const double b = v(k * p + i, j);
        acc += a * a + b * b;
      }
      score(i, j) = score(j, i) = acc;
    }
  return score;
}

Matrix apply_mask(const Matrix& v, const Matrix& mask, int p, int d) {
  Matrix z = v;
  for (int k = 0; k < d; ++k)
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j) z(k * p + j, i) = mask(i, j) * v(k * p + j, i);
  return z;
}

}  // namespace

AdmmResult admm_init(const LaggedDesign& design, int m, const AdmmConfig& cfg) {
  const int p = design.p, d = design.d;
  if (m < 1 || m > p / 2) throw infeasible_error("admm_init: m must lie in [1, floor(p/2)]");
  if (!(cfg.rho > 0) || cfg.max_iter < 1 || !(cfg.tol > 0))
    throw infeasible_error("admm_init: invalid configuration");
  const Matrix xtx = design.X.transpose() * design.X;
  const Matrix xty = design.X.transpose() * design.Y;
  const double rho = cfg.rho * std::max(xtx.trace() / (p * d), 1e-12);
  Eigen::LLT<Matrix> llt(xtx + rho * Matrix::Identity(p * d, p * d));
  if (llt.info() != Eigen::Success) throw numerical_error("admm_init: ridge system not PD");

  AdmmResult out;
  Matrix z = Matrix::Zero(p * d, p), dual = Matrix::Zero(p * d, p);
  for (int it = 1; it <= cfg.max_iter; ++it) {
    const Matrix z_prev = z;
    out.cbar = llt.solve(xty + rho * (z - dual));
    const Matrix v = out.cbar + dual;
    out.trees = top_m_disjoint_trees(edge_scores(v, p, d), m);
    out.mask = Matrix::Zero(p, p);
    for (const auto& t : out.trees) out.mask += t.adjacency();
    out.mask.diagonal().setOnes();  // self lags always admissible
    z = apply_mask(v, out.mask, p, d);
    dual += out.cbar - z;
    out.iters = it;
    out.primal_residual = (out.cbar - z).norm();
    // the dual residual guards the covering-mask case, where the split is
    // inactive and the consensus pair agrees long before the objective has
    // reached its masked optimum
    const double dual_residual = rho * (z - z_prev).norm();
    if (out.primal_residual < cfg.tol && dual_residual < cfg.tol) {
      out.converged = true;
      break;
    }
  }
  out.cbar = z;  // exact support
  out.loss = 0.5 * (design.Y - design.X * out.cbar).squaredNorm();
  return out;
}

TwoMeansSplit two_means_split(const std::vector<double>& values) {
  const int n = static_cast<int>(values.size());
  if (n < 2) throw infeasible_error("two_means_split: need at least two values");
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return values[a] < values[b]; });
  std::vector<double> sorted(n), prefix(n + 1, 0.0), prefix2(n + 1, 0.0);
  for (int i = 0; i < n; ++i) sorted[i] = values[order[i]];
  for (int i = 0; i < n; ++i) {
    prefix[i + 1] = prefix[i] + sorted[i];
    prefix2[i + 1] = prefix2[i] + sorted[i] * sorted[i];
  }
  auto ss = [&](int lo, int hi) {  // within-cluster sum of squares over [lo, hi)
    const int c = hi - lo;
    const double s = prefix[hi] - prefix[lo];
    return (prefix2[hi] - prefix2[lo]) - s * s / c;
  };
  int best_k = 1;
  double best = std::numeric_limits<double>::infinity();
  for (int k = 1; k < n; ++k) {
    const double obj = ss(0, k) + ss(k, n);
    if (obj < best - 1e-15) {
      best = obj;
      best_k = k;
    }
  }
  TwoMeansSplit out;
  out.labels.assign(n, 1);
  for (int i = 0; i < best_k; ++i) out.labels[order[i]] = 0;
  out.mean_low = (prefix[best_k] - prefix[0]) / best_k;
  out.mean_high = (prefix[n] - prefix[best_k]) / (n - best_k);
  out.degenerate = sorted[n - 1] == sorted[0];
  return out;
}

PlateauSurface plateau_select(const Matrix& series, int d_max, int m_max, const AdmmConfig& cfg) {
  const int p = static_cast<int>(series.cols());
  if (d_max < 1 || m_max < 1) throw infeasible_error("plateau_select: empty grid");
  if (m_max > p / 2) throw infeasible_error("plateau_select: m_max exceeds floor(p/2)");
  PlateauSurface out;
  std::vector<double> losses;
  std::vector<int> n_params;  // nonzeros of the d-stacked mask per cell
  int n_rows = 0;
  for (int d = 1; d <= d_max; ++d) {
    const LaggedDesign design = build_lagged_design(series, d, d_max - d);
    n_rows = design.N();
    for (int m = 1; m <= m_max; ++m) {
      const AdmmResult fit = admm_init(design, m, cfg);
      out.cells.push_back(PlateauCell{d, m, fit.loss, false});
      losses.push_back(fit.loss);
      n_params.push_back(d * static_cast<int>((fit.mask.array() != 0.0).count()));
    }
  }
  if (losses.size() < 2) {  // 1x1 grid: nothing to split
    out.selected_d = out.selected_m = 1;
    return out;
  }
  // flat surface: with no signal the loss still drops as cells grow, but only
  // by the chance-level reduction of ~ sigma^2/2 per admitted coefficient;
  // a spread within twice that overfitting scale carries no structure
  const double loss_min = *std::min_element(losses.begin(), losses.end());
  const double loss_max = *std::max_element(losses.begin(), losses.end());
  const int k_min = *std::min_element(n_params.begin(), n_params.end());
  const int k_max = *std::max_element(n_params.begin(), n_params.end());
  const double dof = std::max(n_rows * p - k_max, 1);
  const double null_spread = (k_max - k_min) * loss_min / dof;  // (k-k') sigma^2 / 2
  const TwoMeansSplit split = two_means_split(losses);
  if (split.degenerate || loss_max - loss_min <= 2.0 * null_spread) {
    out.degenerate = true;
    out.selected_d = out.selected_m = 1;
    return out;
  }
  int best_d = -1, best_m = -1;
  for (size_t i = 0; i < out.cells.size(); ++i) {
    if (split.labels[i] != 0) continue;
    out.cells[i].low_cluster = true;
    const int d = out.cells[i].d, m = out.cells[i].m;
    if (best_d < 0 || d + m < best_d + best_m || (d + m == best_d + best_m && d < best_d)) {
      best_d = d;
      best_m = m;
    }
  }
  out.selected_d = best_d;
  out.selected_m = best_m;
  return out;
}

InitialState initial_state(const LaggedDesign& design, const HyperParams& hyper, int m, int p_star,
                           const InitOptions& opts, const AdmmConfig& admm_cfg) {
  const int p = design.p, d = design.d, n = design.N();
  if (p_star < 0 || p_star >= p) throw infeasible_error("initial_state: p_star must lie in [0, p-1]");
  InitialState out;
  out.admm = admm_init(design, m, admm_cfg);

  ParamState& st = out.state;
  st.c = TransitionStack::from_stacked(out.admm.cbar, d);
  st.r.resize(d);
  for (int k = 0; k < d; ++k) st.r[k] = std::pow(hyper.r_decay, k + 1);  // prior mean
  st.s = Vector::Constant(m, 1.0 / m);
  st.u.assign(m, Matrix::Zero(p, p));
  for (int l = 0; l < m; ++l)
    for (int i = 0; i < p; ++i)
      for (int j = i + 1; j < p; ++j) {
        const double u = out.admm.trees[l].contains(i, j) ? opts.on_tree_u : opts.off_tree_u;
        st.u[l](i, j) = st.u[l](j, i) = u;
      }
  RngStream rng(opts.seed);
  st.w_fac = 0.1 * rng.normal_matrix(p, p_star);  // small asymmetry to leave the W=Z=0 saddle
  st.z_fac = Matrix::Zero(n, p_star);
  st.sigma2 = std::max((design.Y - design.X * out.admm.cbar).squaredNorm() / (n * p), 1e-8);

  // tune everything except the coefficients by descent on the potential
  Model model(design, hyper, m, p_star);
  Vector z = to_unconstrained(st);
  double step = opts.gd_step0;
  double f = model.potential(z);
  for (int it = 0; it < opts.gd_steps; ++it) {
    Vector g = model.gradient(z);
    if (!g.allFinite()) break;
    g.head(model.dims().n_c()).setZero();  // coefficients stay at the masked estimate
    const Vector z_new = z - step * g;
    const double f_new = model.potential(z_new);
    if (f_new <= f) {
      z = z_new;
      f = f_new;
    } else {
      step *= 0.5;
      if (step < 1e-12) break;
    }
  }
  out.state = from_unconstrained(z, model.dims());
  return out;
}

}  // namespace treevar
