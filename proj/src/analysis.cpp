#include "treevar/analysis.hpp"

#include <algorithm>
#include <future>
#include <set>

namespace treevar {

GrangerGraph extract_graph(const TransitionStack& c, double delta) {
  if (delta < 0) throw infeasible_error("extract_graph: delta must be nonnegative");
  const int p = c.p;
  GrangerGraph g;
  g.p = p;
  g.strength = Matrix::Zero(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) {
      if (i == j) continue;
      double mx = 0.0;
      for (int k = 0; k < c.d(); ++k) mx = std::max(mx, std::abs(c.coef[k](i, j)));
      g.strength(i, j) = mx;
      if (mx >= delta) g.directed.emplace_back(j, i);  // j leads i
    }
  for (int i = 0; i < p; ++i)
    for (int j = i + 1; j < p; ++j)
      if (g.strength(i, j) >= delta || g.strength(j, i) >= delta) g.undirected.emplace_back(i, j);
  return g;
}

SupportErrors support_errors(const GrangerGraph& estimate, const GrangerGraph& truth) {
  if (estimate.p != truth.p) throw infeasible_error("support_errors: graph sizes differ");
  SupportErrors out;
  std::set<Edge> t(truth.undirected.begin(), truth.undirected.end());
  for (const auto& e : estimate.undirected)
    t.count(e) ? ++out.true_positives : ++out.false_positives;
  out.false_negatives = static_cast<int>(t.size()) - out.true_positives;
  return out;
}

TreeRankPosterior effective_tree_rank(const PosteriorDraws& draws, double threshold) {
  if (draws.states.empty()) throw infeasible_error("effective_tree_rank: no draws");
  const int m = draws.states.front().m();
  TreeRankPosterior out;
  out.histogram.assign(m + 1, 0);
  for (const auto& st : draws.states) {
    const int rank = static_cast<int>((st.s.array() > threshold).count());
    ++out.histogram[rank];
  }
  out.mode = static_cast<int>(std::max_element(out.histogram.begin(), out.histogram.end()) -
                              out.histogram.begin());
  return out;
}

GroundTruth make_ground_truth(const ScenarioConfig& cfg, std::uint64_t seed) {
  const int p = cfg.p, d0 = cfg.d0;
  if (p < 2 || d0 < 1) throw infeasible_error("make_ground_truth: invalid dimensions");
  RngStream rng(seed);
  GroundTruth out;
  out.m0 = cfg.m0;
  Matrix support = Matrix::Zero(p, p);
  if (cfg.kind == "tree") {
    if (cfg.m0 < 1 || cfg.m0 > p / 2)
      throw infeasible_error("make_ground_truth: m0 must lie in [1, floor(p/2)]");
    Matrix w(p, p);
    w.setZero();
    for (int i = 0; i < p; ++i)
      for (int j = i + 1; j < p; ++j) w(i, j) = w(j, i) = rng.uniform();
    for (const auto& t : top_m_disjoint_trees(w, cfg.m0)) support += t.adjacency();
  } else if (cfg.kind == "sparse") {
    const int n_pairs = p * (p - 1) / 2;
    int want = std::max(1, static_cast<int>(std::lround(cfg.density * n_pairs)));
    std::vector<Edge> pairs;
    for (int i = 0; i < p; ++i)
      for (int j = i + 1; j < p; ++j) pairs.emplace_back(i, j);
    for (int i = 0; i < want; ++i) {  // partial Fisher-Yates
      const int j = i + rng.uniform_int(n_pairs - i);
      std::swap(pairs[i], pairs[j]);
      support(pairs[i].first, pairs[i].second) = support(pairs[i].second, pairs[i].first) = 1.0;
    }
  } else {
    throw infeasible_error("make_ground_truth: kind must be 'tree' or 'sparse'");
  }

  out.c0 = TransitionStack(d0, p);
  for (int k = 0; k < d0; ++k)
    for (int i = 0; i < p; ++i)
      for (int j = i + 1; j < p; ++j)
        if (support(i, j) > 0) {
          out.c0.coef[k](i, j) = rng.normal();
          out.c0.coef[k](j, i) = rng.normal();
        }
  // the degree statistics scale linearly in a global factor, so the target is
  // hit exactly in one step
  const StabilityReport rep = check_stability_sufficient(out.c0);
  const double stat =
      std::max(rep.degrees_star.maxCoeff(), rep.degrees_dstar.maxCoeff()) * std::sqrt(double(d0));
  if (!(stat > 0)) throw numerical_error("make_ground_truth: degenerate support draw");
  const double scale = cfg.stability_target / stat;
  for (auto& mat : out.c0.coef) mat *= scale;

  Matrix base(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) base(i, j) = std::pow(0.5, std::abs(i - j));
  double c_norm = 0.0;
  for (const auto& mat : out.c0.coef) c_norm += mat.squaredNorm();
  out.sigma_eps = base * (std::sqrt(c_norm) / (cfg.snr * base.norm()));
  out.graph = extract_graph(out.c0, 1e-12);
  return out;
}

Matrix forecast(const PosteriorDraws& draws, const Matrix& history, int H, std::uint64_t seed) {
  if (draws.states.empty()) throw infeasible_error("forecast: no draws");
  if (H < 1) throw infeasible_error("forecast: horizon must be positive");
  const int p = draws.states.front().p();
  Matrix acc = Matrix::Zero(H, p);
  for (size_t i = 0; i < draws.states.size(); ++i) {
    const ParamState& st = draws.states[i];
    acc += simulate_var_from(st.c, st.noise_covariance(), history, H, derive_seed(seed, i));
  }
  return acc / static_cast<double>(draws.states.size());
}

namespace {

double stack_rel_error(const TransitionStack& est, const TransitionStack& truth) {
  double num = 0.0, den = 0.0;
  const int d = std::max(est.d(), truth.d());
  for (int k = 0; k < d; ++k) {
    const Matrix a = k < est.d() ? est.coef[k] : Matrix::Zero(est.p, est.p);
    const Matrix b = k < truth.d() ? truth.coef[k] : Matrix::Zero(truth.p, truth.p);
    num += (a - b).squaredNorm();
    den += b.squaredNorm();
  }
  return std::sqrt(num / den);
}

}  // namespace

namespace {

struct ReplicateResult {
  MetricsRow row;
  std::vector<int> rank_histogram;
};

ReplicateResult run_replicate(const ScenarioConfig& cfg, int rep, int H, int p_star) {
  const std::uint64_t rep_seed = derive_seed(cfg.seed, rep);
  const GroundTruth truth = make_ground_truth(cfg, rep_seed);
  const TimeSeries raw = simulate_var(truth.c0, truth.sigma_eps, cfg.T, derive_seed(rep_seed, 1));
  const TimeSeries series = standardize(raw.data);
  const LaggedDesign design = build_lagged_design(series.data, cfg.d);

  InitOptions init_opts;
  init_opts.seed = derive_seed(rep_seed, 2);
  const InitialState init = initial_state(design, cfg.hyper, cfg.m, p_star, init_opts);
  HmcConfig hmc;
  hmc.n_iter = cfg.n_iter;
  hmc.n_warmup = cfg.n_warmup;
  hmc.leapfrog = cfg.leapfrog;
  hmc.target_accept = cfg.target_accept;
  hmc.thin = cfg.thin;
  hmc.seed = derive_seed(rep_seed, 3);
  const PosteriorDraws draws = hmc_run(init.state, design, cfg.hyper, hmc);

  // back to the source scale for comparison against the generating stack
  const TransitionStack c_hat =
      unstandardize_coefficients(TransitionStack::from_stacked(draws.coefficient_mean(), cfg.d),
                                 series.scale);
  MetricsRow row;
  row.replicate = rep;
  row.T = cfg.T;
  row.estimation_error = stack_rel_error(c_hat, truth.c0);
  const GrangerGraph est_graph = extract_graph(c_hat, cfg.delta);
  const SupportErrors errs = support_errors(est_graph, truth.graph);
  row.false_positives = errs.false_positives;
  row.false_negatives = errs.false_negatives;

  // truth-simulated continuation vs the standardized-model forecast mapped back
  const std::uint64_t noise_seed = derive_seed(rep_seed, 4);
  const Matrix y_star =
      simulate_var_from(truth.c0, truth.sigma_eps, raw.data, H, noise_seed);
  const Matrix fc_std = forecast(draws, series.data, H, noise_seed);
  Matrix y_hat(H, cfg.p);
  for (int j = 0; j < cfg.p; ++j)
    y_hat.col(j) = fc_std.col(j) * series.scale[j] + Vector::Constant(H, series.center[j]);
  row.prediction_error = (y_star - y_hat).norm() / y_star.norm();

  const TreeRankPosterior rank = effective_tree_rank(draws);
  row.tree_rank_mode = rank.mode;
  row.accept_rate = draws.accept_rate;
  row.divergences = draws.divergences;
  return {row, rank.histogram};
}

}  // namespace

ScenarioResult run_scenario(const ScenarioConfig& cfg) {
  ScenarioResult out;
  out.tree_rank_histogram.assign(cfg.m + 1, 0);
  const int H = (cfg.T + 4) / 5;  // ceil(0.2 T)
  const int p_star = cfg.p_star < 0 ? default_p_star(cfg.p) : cfg.p_star;
  std::vector<ReplicateResult> results(cfg.replicates);
  if (cfg.threads > 1) {
    // every replicate is seeded independently, so scheduling cannot change results
    std::vector<std::future<ReplicateResult>> futs(cfg.replicates);
    const int width = std::min(cfg.threads, cfg.replicates);
    int next = 0;
    auto launch = [&](int rep) {
      futs[rep] = std::async(std::launch::async, run_replicate, std::cref(cfg), rep, H, p_star);
    };
    while (next < width) launch(next++);
    for (int rep = 0; rep < cfg.replicates; ++rep) {
      results[rep] = futs[rep].get();
      if (next < cfg.replicates) launch(next++);
    }
  } else {
    for (int rep = 0; rep < cfg.replicates; ++rep) results[rep] = run_replicate(cfg, rep, H, p_star);
  }
  for (const auto& res : results) {
    out.rows.push_back(res.row);
    for (size_t i = 0; i < res.rank_histogram.size() && i < out.tree_rank_histogram.size(); ++i)
      out.tree_rank_histogram[i] += res.rank_histogram[i];
  }
  return out;
}

std::vector<SweepRow> threshold_sweep(const TransitionStack& estimate, const GrangerGraph* truth,
                                      const std::vector<double>& deltas) {
  std::vector<SweepRow> out;
  for (const double delta : deltas) {
    const GrangerGraph g = extract_graph(estimate, delta);
    SweepRow row;
    row.delta = delta;
    row.edges = static_cast<int>(g.directed.size());
    row.components = count_components(g.p, g.undirected);
    if (truth) {
      const SupportErrors errs = support_errors(g, *truth);
      row.false_positives = errs.false_positives;
      row.false_negatives = errs.false_negatives;
    }
    out.push_back(row);
  }
  return out;
}

double r_squared(const Matrix& cbar, const LaggedDesign& design) {
  const Matrix resid = design.Y - design.X * cbar;
  const Matrix centered = design.Y.rowwise() - design.Y.colwise().mean();
  return 1.0 - resid.squaredNorm() / centered.squaredNorm();
}

}  // namespace treevar
