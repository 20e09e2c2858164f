#include "doctest.h"

#include "treevar/analysis.hpp"

#include <cmath>

using namespace treevar;

namespace {

ParamState state_with_s(const Vector& s) {
  ParamState st;
  st.c = TransitionStack(1, 3);
  st.s = s;
  st.sigma2 = 1.0;
  return st;
}

}  // namespace

TEST_CASE("graph extraction thresholds the strongest lag effect") {
  TransitionStack c(2, 3);
  c.coef[0](0, 1) = 0.30;   // series 1 leads series 0
  c.coef[1](0, 1) = -0.50;  // stronger at lag 2
  c.coef[0](2, 1) = 0.05;
  c.coef[1](2, 2) = 0.90;  // self loop: never reported
  const GrangerGraph g = extract_graph(c, 0.1);
  CHECK(g.strength(0, 1) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(g.strength(2, 1) == doctest::Approx(0.05).epsilon(1e-14));
  CHECK(g.strength(2, 2) == 0.0);
  REQUIRE(g.directed.size() == 1);
  CHECK(g.directed[0] == std::pair<int, int>(1, 0));
  REQUIRE(g.undirected.size() == 1);
  CHECK(g.undirected[0] == Edge(0, 1));
  // delta 0 reports every off-diagonal pair
  CHECK(extract_graph(c, 0.0).directed.size() == 6);
  CHECK_THROWS_AS(extract_graph(c, -0.1), Error);
}

TEST_CASE("support comparison counts undirected confusion cells") {
  GrangerGraph truth;
  truth.p = 4;
  truth.undirected = {{0, 1}, {1, 2}, {2, 3}};
  GrangerGraph est;
  est.p = 4;
  est.undirected = {{0, 1}, {0, 3}, {1, 2}};
  const SupportErrors errs = support_errors(est, truth);
  CHECK(errs.true_positives == 2);
  CHECK(errs.false_positives == 1);
  CHECK(errs.false_negatives == 1);
}

TEST_CASE("effective tree rank counts active mixture weights") {
  PosteriorDraws draws;
  Vector s1(2), s2(2), s3(2);
  s1 << 1e-9, 1.0;
  s2 << 0.5, 0.5;
  s3 << 0.4, 0.6;
  draws.states = {state_with_s(s1), state_with_s(s2), state_with_s(s3)};
  const TreeRankPosterior rank = effective_tree_rank(draws);
  REQUIRE(rank.histogram.size() == 3);
  CHECK(rank.histogram[0] == 0);
  CHECK(rank.histogram[1] == 1);
  CHECK(rank.histogram[2] == 2);
  CHECK(rank.mode == 2);
  // a coarser threshold deactivates everything
  CHECK(effective_tree_rank(draws, 2.0).mode == 0);
}

TEST_CASE("ground truth hits the stability target and signal-to-noise ratio") {
  ScenarioConfig cfg;
  cfg.p = 8;
  cfg.d0 = 2;
  cfg.m0 = 2;
  cfg.snr = 2.0;
  cfg.stability_target = 0.95;
  const GroundTruth gt = make_ground_truth(cfg, 42);

  const StabilityReport rep = check_stability_sufficient(gt.c0);
  const double stat = std::max(rep.degrees_star.maxCoeff(), rep.degrees_dstar.maxCoeff()) *
                      std::sqrt(static_cast<double>(cfg.d0));
  CHECK(stat == doctest::Approx(0.95).epsilon(1e-10));
  CHECK(companion_spectral_radius(gt.c0) < 1.0);

  double c_norm = 0.0;
  for (const auto& m : gt.c0.coef) c_norm += m.squaredNorm();
  CHECK(std::sqrt(c_norm) / gt.sigma_eps.norm() == doctest::Approx(2.0).epsilon(1e-10));
  // noise correlation decays geometrically off the diagonal
  CHECK(gt.sigma_eps(0, 1) / gt.sigma_eps(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(gt.sigma_eps(0, 3) / gt.sigma_eps(0, 0) == doctest::Approx(0.125).epsilon(1e-12));

  // support is a union of m0 edge-disjoint spanning trees: 2(p-1) undirected
  // edges, rank-m0 coverable, zero diagonal
  CHECK(gt.graph.undirected.size() == 2 * (cfg.p - 1));
  WeightedGraph support = WeightedGraph::from_edges(cfg.p, gt.graph.undirected);
  CHECK(tree_rank_exact(support) <= cfg.m0);
  for (int k = 0; k < cfg.d0; ++k) CHECK(gt.c0.coef[k].diagonal().norm() == 0.0);

  const GroundTruth same = make_ground_truth(cfg, 42);
  CHECK((same.c0.stacked() - gt.c0.stacked()).norm() == 0.0);

  ScenarioConfig sparse = cfg;
  sparse.kind = "sparse";
  sparse.density = 0.15;
  const GroundTruth gs = make_ground_truth(sparse, 7);
  const int want = static_cast<int>(std::lround(0.15 * 28));
  CHECK(static_cast<int>(gs.graph.undirected.size()) == want);

  ScenarioConfig bad = cfg;
  bad.kind = "dense";
  CHECK_THROWS_AS(make_ground_truth(bad, 1), Error);
}

TEST_CASE("threshold sweep is monotone in the cutoff") {
  ScenarioConfig cfg;
  cfg.p = 6;
  cfg.d0 = 2;
  cfg.m0 = 2;
  const GroundTruth gt = make_ground_truth(cfg, 9);
  std::vector<double> deltas;
  for (int k = 0; k <= 10; ++k) deltas.push_back(0.01 * k);
  const auto rows = threshold_sweep(gt.c0, &gt.graph, deltas);
  REQUIRE(rows.size() == deltas.size());
  CHECK(rows[0].edges == 6 * 5);  // delta 0 keeps every ordered pair
  CHECK(rows[0].false_negatives == 0);
  for (size_t k = 1; k < rows.size(); ++k) {
    CHECK(rows[k].edges <= rows[k - 1].edges);
    CHECK(rows[k].components >= rows[k - 1].components);
    CHECK(rows[k].false_negatives >= rows[k - 1].false_negatives);
  }
  // without a truth graph the confusion columns stay zero
  const auto bare = threshold_sweep(gt.c0, nullptr, deltas);
  CHECK(bare[3].false_positives == 0);
  CHECK(bare[3].false_negatives == 0);
  CHECK(bare[3].edges == rows[3].edges);
}

TEST_CASE("forecast averages per-draw simulations from the history tail") {
  const int p = 3;
  RngStream rng(15);
  ParamState st;
  st.c = TransitionStack(1, p);
  st.c.coef[0] = 0.2 * rng.normal_matrix(p, p);
  st.sigma2 = 1e-30;  // effectively deterministic propagation
  PosteriorDraws draws;
  draws.states = {st};
  const Matrix history = rng.normal_matrix(5, p);
  const Matrix f = forecast(draws, history, 2, 77);
  REQUIRE(f.rows() == 2);
  REQUIRE(f.cols() == p);
  const Vector step1 = st.c.coef[0] * history.row(4).transpose();
  CHECK((f.row(0).transpose() - step1).norm() < 1e-12);
  CHECK((f.row(1).transpose() - st.c.coef[0] * step1).norm() < 1e-12);

  // averaging two identical states changes nothing but consumes new seeds
  draws.states = {st, st};
  const Matrix f2 = forecast(draws, history, 2, 77);
  CHECK((f2 - f).cwiseAbs().maxCoeff() < 1e-12);
  const Matrix f3 = forecast(draws, history, 2, 78);
  CHECK((f3 - f).cwiseAbs().maxCoeff() < 1e-12);  // noise is negligible anyway
}

TEST_CASE("in-sample fit share is one for exact fits and below one otherwise") {
  RngStream rng(21);
  const int p = 3, n = 50;
  LaggedDesign des;
  des.p = p;
  des.d = 1;
  des.X = rng.normal_matrix(n, p);
  Matrix cbar = 0.4 * rng.normal_matrix(p, p);
  des.Y = des.X * cbar;
  CHECK(r_squared(cbar, des) == doctest::Approx(1.0).epsilon(1e-12));
  des.Y += 0.5 * rng.normal_matrix(n, p);
  const double r2 = r_squared(cbar, des);
  CHECK(r2 < 1.0);
  CHECK(r2 > 0.0);
  CHECK(r_squared(Matrix::Zero(p, p), des) < r2);
}

TEST_CASE("scenario runner produces seeded, order-stable replicate metrics") {
  ScenarioConfig cfg;
  cfg.p = 4;
  cfg.T = 90;
  cfg.d0 = 1;
  cfg.m0 = 1;
  cfg.replicates = 2;
  cfg.seed = 3;
  cfg.d = 1;
  cfg.m = 1;
  cfg.p_star = 0;
  cfg.n_iter = 80;
  cfg.n_warmup = 40;
  cfg.leapfrog = 8;
  const ScenarioResult res = run_scenario(cfg);
  REQUIRE(res.rows.size() == 2);
  int pooled = 0;
  for (const int h : res.tree_rank_histogram) pooled += h;
  CHECK(pooled == 2 * 40);  // kept draws per replicate times replicates
  for (int rep = 0; rep < 2; ++rep) {
    const MetricsRow& row = res.rows[rep];
    CHECK(row.replicate == rep);
    CHECK(row.T == 90);
    CHECK(std::isfinite(row.estimation_error));
    CHECK(row.estimation_error > 0.0);
    CHECK(std::isfinite(row.prediction_error));
    CHECK(row.accept_rate >= 0.0);
    CHECK(row.false_positives >= 0);
    CHECK(row.false_negatives >= 0);
  }
  // replicates are independently seeded, so a rerun reproduces every row
  const ScenarioResult again = run_scenario(cfg);
  for (int rep = 0; rep < 2; ++rep) {
    CHECK(again.rows[rep].estimation_error == res.rows[rep].estimation_error);
    CHECK(again.rows[rep].prediction_error == res.rows[rep].prediction_error);
    CHECK(again.rows[rep].tree_rank_mode == res.rows[rep].tree_rank_mode);
  }
}
