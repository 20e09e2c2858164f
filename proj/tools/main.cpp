#include "treevar/analysis.hpp"
#include "treevar/io.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <filesystem>
#include <sstream>
#include <fstream>
#include <iostream>

using nlohmann::json;
namespace fs = std::filesystem;
using namespace treevar;

namespace {

constexpr const char* kVersion = "0.1.0";

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw io_error("cannot create directory " + dir);
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot write " + path);
  out << j.dump(2) << "\n";
  if (!out) throw io_error("write failed: " + path);
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw io_error(path + ": " + e.what());
  }
  return j;
}

// ---- simulate ----------------------------------------------------------

struct SimulateFlags {
  int p = 10, T = 200, d0 = 1, m0 = 2, burnin = 200;
  std::string kind = "tree";
  double density = 0.05, snr = 2.0, stability_target = 0.95;
  std::uint64_t seed = 1;
  std::string out_dir = "sim_out";

  json to_json() const {
    return json{{"p", p},   {"T", T},     {"d0", d0},   {"m0", m0},
                {"burnin", burnin}, {"kind", kind}, {"density", density}, {"snr", snr},
                {"stability_target", stability_target}, {"seed", seed}};
  }
  void from_json(const json& j) {
    p = j.at("p");
    T = j.at("T");
    d0 = j.at("d0");
    m0 = j.at("m0");
    burnin = j.at("burnin");
    kind = j.at("kind");
    density = j.at("density");
    snr = j.at("snr");
    stability_target = j.at("stability_target");
    seed = j.at("seed");
  }
};

int run_simulate(const SimulateFlags& f) {
  ScenarioConfig cfg;
  cfg.p = f.p;
  cfg.T = f.T;
  cfg.d0 = f.d0;
  cfg.m0 = f.m0;
  cfg.kind = f.kind;
  cfg.density = f.density;
  cfg.snr = f.snr;
  cfg.stability_target = f.stability_target;
  const GroundTruth truth = make_ground_truth(cfg, f.seed);
  const TimeSeries series = simulate_var(truth.c0, truth.sigma_eps, f.T, derive_seed(f.seed, 1),
                                         f.burnin);
  ensure_dir(f.out_dir);
  std::vector<std::string> header(f.p);
  for (int j = 0; j < f.p; ++j) header[j] = "y" + std::to_string(j);
  write_csv_matrix(f.out_dir + "/series.csv", series.data, header);
  write_csv_matrix(f.out_dir + "/truth_coefficients.csv", truth.c0.stacked());
  write_csv_matrix(f.out_dir + "/truth_noise.csv", truth.sigma_eps);
  std::vector<double> wts;
  for (const auto& [i, j] : truth.graph.undirected)
    wts.push_back(std::max(truth.graph.strength(i, j), truth.graph.strength(j, i)));
  write_edge_list(f.out_dir + "/truth_edges.csv", truth.graph.undirected, wts);
  json manifest{{"command", "simulate"}, {"version", kVersion}, {"flags", f.to_json()}};
  write_json(f.out_dir + "/manifest.json", manifest);
  std::cout << "simulate: wrote " << f.T << " x " << f.p << " series to " << f.out_dir
            << " (edges: " << truth.graph.undirected.size() << ")\n";
  return 0;
}

// ---- fit ---------------------------------------------------------------

struct FitFlags {
  std::string input;
  std::string out_dir = "fit_out";
  int d = 0, m = 0;  // 0: use --auto grid
  bool auto_select = false;
  int d_max = 3, m_max = 3;
  int p_star = -1;
  int iters = 5000, warmup = 2500, leapfrog = 32, thin = 1;
  double target_accept = 0.6, delta = 0.05, init_eps = 0.1;
  std::uint64_t seed = 1;
  bool no_standardize = false;
  std::string jacobian = "hierarchical";
  double tau = 0.01, alpha_eta = 3.0, alpha_s = 0.1, a_u = 1.0, b_u = 1.0, r_decay = 0.1;

  json to_json() const {
    return json{{"input", input},       {"d", d},
                {"m", m},               {"auto", auto_select},
                {"d_max", d_max},       {"m_max", m_max},
                {"p_star", p_star},     {"iters", iters},
                {"warmup", warmup},     {"leapfrog", leapfrog},
                {"thin", thin},         {"target_accept", target_accept},
                {"delta", delta},       {"init_eps", init_eps},
                {"seed", seed},         {"no_standardize", no_standardize},
                {"jacobian", jacobian}, {"tau", tau},
                {"alpha_eta", alpha_eta}, {"alpha_s", alpha_s},
                {"a_u", a_u},           {"b_u", b_u},
                {"r_decay", r_decay}};
  }
  void from_json(const json& j) {
    input = j.at("input");
    d = j.at("d");
    m = j.at("m");
    auto_select = j.at("auto");
    d_max = j.at("d_max");
    m_max = j.at("m_max");
    p_star = j.at("p_star");
    iters = j.at("iters");
    warmup = j.at("warmup");
    leapfrog = j.at("leapfrog");
    thin = j.at("thin");
    target_accept = j.at("target_accept");
    delta = j.at("delta");
    init_eps = j.at("init_eps");
    seed = j.at("seed");
    no_standardize = j.at("no_standardize");
    jacobian = j.at("jacobian");
    tau = j.at("tau");
    alpha_eta = j.at("alpha_eta");
    alpha_s = j.at("alpha_s");
    a_u = j.at("a_u");
    b_u = j.at("b_u");
    r_decay = j.at("r_decay");
  }
};

HyperParams hyper_from_flags(const FitFlags& f) {
  HyperParams h;
  h.tau = f.tau;
  h.alpha_eta = f.alpha_eta;
  h.alpha_s = f.alpha_s;
  h.a_u = f.a_u;
  h.b_u = f.b_u;
  h.r_decay = f.r_decay;
  return h;
}

int run_fit(const FitFlags& f) {
  if (f.input.empty()) throw io_error("fit: --input is required");
  const Matrix raw = read_csv_matrix(f.input);
  const int p = static_cast<int>(raw.cols());
  Matrix data = raw;
  Vector scale = Vector::Ones(p);
  if (!f.no_standardize) {
    const TimeSeries std_series = standardize(raw);
    data = std_series.data;
    scale = std_series.scale;
  }
  const HyperParams hyper = hyper_from_flags(f);
  int d = f.d, m = f.m;
  bool degenerate_grid = false;
  if (f.auto_select || d <= 0 || m <= 0) {
    const PlateauSurface surf = plateau_select(data, f.d_max, std::max(1, std::min(f.m_max, p / 2)));
    d = surf.selected_d;
    m = surf.selected_m;
    degenerate_grid = surf.degenerate;
    if (degenerate_grid)
      std::cerr << "fit: flat model-size surface, falling back to (d, m) = (1, 1)\n";
  }
  const int p_star = f.p_star < 0 ? default_p_star(p) : f.p_star;
  const JacobianMode mode =
      f.jacobian == "pseudo" ? JacobianMode::pseudo : JacobianMode::hierarchical;
  if (f.jacobian != "pseudo" && f.jacobian != "hierarchical")
    throw infeasible_error("fit: --jacobian must be 'hierarchical' or 'pseudo'");

  const LaggedDesign design = build_lagged_design(data, d);
  InitOptions init_opts;
  init_opts.seed = derive_seed(f.seed, 0xADull);
  const InitialState init = initial_state(design, hyper, m, p_star, init_opts);
  HmcConfig hmc;
  hmc.n_iter = f.iters;
  hmc.n_warmup = f.warmup;
  hmc.leapfrog = f.leapfrog;
  hmc.thin = f.thin;
  hmc.target_accept = f.target_accept;
  hmc.init_eps = f.init_eps;
  hmc.seed = f.seed;
  const PosteriorDraws draws = hmc_run(init.state, design, hyper, hmc, mode);

  const Matrix cbar_mean = draws.coefficient_mean();
  const GrangerGraph graph = extract_graph(TransitionStack::from_stacked(cbar_mean, d), f.delta);
  const TreeRankPosterior rank = effective_tree_rank(draws);

  ensure_dir(f.out_dir);
  write_csv_matrix(f.out_dir + "/coefficients_mean.csv", cbar_mean);
  {
    std::ofstream out(f.out_dir + "/graph_edges.csv");
    if (!out) throw io_error("cannot write graph_edges.csv");
    out << "src,dst,weight\n";
    for (const auto& [src, dst] : graph.directed)
      out << src << "," << dst << "," << format_double(graph.strength(dst, src)) << "\n";
  }
  {
    Matrix hist(rank.histogram.size(), 2);
    for (size_t i = 0; i < rank.histogram.size(); ++i) {
      hist(i, 0) = static_cast<double>(i);
      hist(i, 1) = rank.histogram[i];
    }
    write_csv_matrix(f.out_dir + "/tree_rank.csv", hist, {"rank", "draws"});
  }
  {
    const auto& c0 = draws.chains.front();
    Matrix diag(c0.potential_trace.size(), 3);
    for (size_t i = 0; i < c0.potential_trace.size(); ++i) {
      diag(i, 0) = c0.potential_trace[i];
      diag(i, 1) = c0.accept_trace[i];
      diag(i, 2) = c0.energy_error_trace[i];
    }
    write_csv_matrix(f.out_dir + "/diagnostics.csv", diag,
                     {"potential", "accepted", "energy_error"});
  }
  json summary{{"d", d},
               {"m", m},
               {"p", p},
               {"p_star", p_star},
               {"draws", draws.states.size()},
               {"accept_rate", draws.accept_rate},
               {"divergences", draws.divergences},
               {"step_size", draws.chains.front().eps},
               {"edges", graph.directed.size()},
               {"tree_rank_mode", rank.mode},
               {"r2_in_sample", r_squared(cbar_mean, design)},
               {"degenerate_grid", degenerate_grid},
               {"standardized", !f.no_standardize}};
  write_json(f.out_dir + "/summary.json", summary);
  json manifest{{"command", "fit"}, {"version", kVersion}, {"flags", f.to_json()}};
  write_json(f.out_dir + "/manifest.json", manifest);
  std::cout << "fit: d=" << d << " m=" << m << " draws=" << draws.states.size()
            << " accept=" << draws.accept_rate << " edges=" << graph.directed.size()
            << " tree_rank_mode=" << rank.mode << "\n";
  return 0;
}

// ---- treerank ----------------------------------------------------------

int run_treerank(const std::string& edges_path, int p_override, const std::string& out_path) {
  const EdgeListCsv in = read_edge_list(edges_path);
  const int p = p_override > 0 ? p_override : in.p;
  if (p_override > 0 && in.p > p_override)
    throw infeasible_error("treerank: --p smaller than the largest edge index");
  const WeightedGraph g = WeightedGraph::from_edges(p, in.edges);
  const TreeRankBound bound = tree_rank_upper(g);
  const auto forests = forest_decomposition(g, bound.trees);
  json j{{"p", p}, {"edges", in.edges.size()}, {"upper_bound", bound.m}};
  if (p <= 12) j["exact"] = tree_rank_exact(g);
  json fj = json::array();
  for (const auto& f : forests) {
    json edges = json::array();
    for (const auto& [a, b] : f) edges.push_back({a, b});
    fj.push_back(edges);
  }
  j["forests"] = fj;
  std::cout << "tree rank: ";
  if (j.contains("exact")) std::cout << "exact=" << j["exact"] << " ";
  std::cout << "upper=" << bound.m << " (p=" << p << ", edges=" << in.edges.size() << ")\n";
  for (size_t l = 0; l < forests.size(); ++l)
    std::cout << "  forest " << l + 1 << ": " << forests[l].size() << " edges\n";
  if (!out_path.empty()) write_json(out_path, j);
  return 0;
}

// ---- select ------------------------------------------------------------

int run_select(const std::string& input, int d_max, int m_max, bool no_standardize,
               const std::string& out_path) {
  const Matrix raw = read_csv_matrix(input);
  Matrix data = raw;
  if (!no_standardize) data = standardize(raw).data;
  const int p = static_cast<int>(raw.cols());
  const PlateauSurface surf = plateau_select(data, d_max, std::max(1, std::min(m_max, p / 2)));
  if (!out_path.empty()) {
    Matrix cells(surf.cells.size(), 4);
    for (size_t i = 0; i < surf.cells.size(); ++i) {
      cells(i, 0) = surf.cells[i].d;
      cells(i, 1) = surf.cells[i].m;
      cells(i, 2) = surf.cells[i].loss;
      cells(i, 3) = surf.cells[i].low_cluster;
    }
    write_csv_matrix(out_path, cells, {"d", "m", "loss", "low_cluster"});
  }
  if (surf.degenerate)
    std::cout << "select: flat surface, fallback (d, m) = (1, 1)\n";
  else
    std::cout << "select: (d, m) = (" << surf.selected_d << ", " << surf.selected_m << ")\n";
  return 0;
}

// ---- bench -------------------------------------------------------------

template <typename T>
T cfg_get(const std::map<std::string, std::string>& kv, const std::string& key, T fallback) {
  const auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  if constexpr (std::is_same_v<T, std::string>) {
    return it->second;
  } else {
    std::stringstream ss(it->second);
    T out;
    ss >> out;
    if (ss.fail()) throw io_error("bench config: bad value for " + key);
    return out;
  }
}

int run_bench(const std::string& config_path, const std::string& out_dir) {
  const auto kv = read_config(config_path);
  ScenarioConfig cfg;
  cfg.p = cfg_get(kv, "p", cfg.p);
  cfg.d0 = cfg_get(kv, "d0", cfg.d0);
  cfg.m0 = cfg_get(kv, "m0", cfg.m0);
  cfg.kind = cfg_get<std::string>(kv, "kind", cfg.kind);
  cfg.density = cfg_get(kv, "density", cfg.density);
  cfg.snr = cfg_get(kv, "snr", cfg.snr);
  cfg.replicates = cfg_get(kv, "replicates", cfg.replicates);
  cfg.seed = cfg_get<std::uint64_t>(kv, "seed", cfg.seed);
  cfg.d = cfg_get(kv, "d", cfg.d);
  cfg.m = cfg_get(kv, "m", cfg.m);
  cfg.p_star = cfg_get(kv, "p_star", cfg.p_star);
  cfg.n_iter = cfg_get(kv, "iters", cfg.n_iter);
  cfg.n_warmup = cfg_get(kv, "warmup", cfg.n_warmup);
  cfg.leapfrog = cfg_get(kv, "leapfrog", cfg.leapfrog);
  cfg.thin = cfg_get(kv, "thin", cfg.thin);
  cfg.target_accept = cfg_get(kv, "target_accept", cfg.target_accept);
  cfg.delta = cfg_get(kv, "delta", cfg.delta);
  cfg.threads = cfg_get(kv, "threads", cfg.threads);
  cfg.hyper.tau = cfg_get(kv, "tau", cfg.hyper.tau);
  cfg.hyper.alpha_eta = cfg_get(kv, "alpha_eta", cfg.hyper.alpha_eta);
  cfg.hyper.alpha_s = cfg_get(kv, "alpha_s", cfg.hyper.alpha_s);
  std::vector<int> t_values;
  {
    std::stringstream ss(cfg_get<std::string>(kv, "T", std::to_string(cfg.T)));
    std::string tok;
    while (std::getline(ss, tok, ',')) t_values.push_back(std::stoi(tok));
  }
  ensure_dir(out_dir);
  std::ofstream metrics(out_dir + "/metrics.csv");
  if (!metrics) throw io_error("cannot write metrics.csv");
  metrics << "T,replicate,estimation_error,prediction_error,false_positives,false_negatives,"
             "tree_rank_mode,accept_rate,divergences\n";
  json agg = json::array();
  for (const int T : t_values) {
    ScenarioConfig run_cfg = cfg;
    run_cfg.T = T;
    const ScenarioResult res = run_scenario(run_cfg);
    double est = 0.0, pred = 0.0;
    for (const auto& row : res.rows) {
      metrics << row.T << "," << row.replicate << "," << format_double(row.estimation_error)
              << "," << format_double(row.prediction_error) << "," << row.false_positives << ","
              << row.false_negatives << "," << row.tree_rank_mode << ","
              << format_double(row.accept_rate) << "," << row.divergences << "\n";
      est += row.estimation_error;
      pred += row.prediction_error;
    }
    agg.push_back(json{{"T", T},
                       {"mean_estimation_error", est / res.rows.size()},
                       {"mean_prediction_error", pred / res.rows.size()},
                       {"tree_rank_histogram", res.tree_rank_histogram}});
    std::cout << "bench: T=" << T << " mean est err=" << est / res.rows.size() << "\n";
  }
  json manifest{{"command", "bench"}, {"version", kVersion}, {"config", config_path}};
  write_json(out_dir + "/aggregate.json", agg);
  write_json(out_dir + "/manifest.json", manifest);
  return 0;
}

// ---- summarize ---------------------------------------------------------

int run_summarize(const std::string& coef_path, int d, const std::string& truth_edges,
                  double grid_lo, double grid_hi, double grid_step,
                  const std::string& heldout_path, const std::string& out_path) {
  const Matrix cbar = read_csv_matrix(coef_path);
  if (d < 1 || cbar.rows() != d * cbar.cols())
    throw infeasible_error("summarize: coefficient matrix is not (p d) x p for --d");
  const TransitionStack c = TransitionStack::from_stacked(cbar, d);
  GrangerGraph truth;
  const bool have_truth = !truth_edges.empty();
  if (have_truth) {
    const EdgeListCsv e = read_edge_list(truth_edges);
    truth.p = std::max(e.p, c.p);
    truth.undirected = e.edges;
  }
  std::vector<double> deltas;
  for (double x = grid_lo; x <= grid_hi + 1e-12; x += grid_step) deltas.push_back(x);
  const auto sweep = threshold_sweep(c, have_truth ? &truth : nullptr, deltas);
  Matrix rows(sweep.size(), 5);
  for (size_t i = 0; i < sweep.size(); ++i) {
    rows(i, 0) = sweep[i].delta;
    rows(i, 1) = sweep[i].edges;
    rows(i, 2) = sweep[i].false_positives;
    rows(i, 3) = sweep[i].false_negatives;
    rows(i, 4) = sweep[i].components;
  }
  if (!out_path.empty())
    write_csv_matrix(out_path, rows, {"delta", "edges", "false_positives", "false_negatives",
                                      "components"});
  for (size_t i = 0; i < sweep.size(); ++i)
    std::cout << "delta=" << sweep[i].delta << " edges=" << sweep[i].edges
              << " components=" << sweep[i].components << "\n";
  if (!heldout_path.empty()) {
    const Matrix held = read_csv_matrix(heldout_path);
    const LaggedDesign design = build_lagged_design(held, d);
    std::cout << "heldout r2=" << r_squared(cbar, design) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sparse near-connected lead-lag network estimation for multivariate time series"};
  app.require_subcommand(1);

  SimulateFlags sim;
  auto* c_sim = app.add_subcommand("simulate", "draw a ground-truth system and simulate a series");
  c_sim->add_option("--p", sim.p, "series dimension");
  c_sim->add_option("--T", sim.T, "length");
  c_sim->add_option("--d0", sim.d0, "generating lag order");
  c_sim->add_option("--m0", sim.m0, "trees in the union support");
  c_sim->add_option("--kind", sim.kind, "support kind: tree | sparse");
  c_sim->add_option("--density", sim.density, "edge density for kind=sparse");
  c_sim->add_option("--snr", sim.snr, "signal-to-noise ratio");
  c_sim->add_option("--burnin", sim.burnin, "discarded initial steps");
  c_sim->add_option("--seed", sim.seed, "random seed");
  c_sim->add_option("--out", sim.out_dir, "output directory");

  FitFlags fit;
  std::string fit_manifest;
  auto* c_fit = app.add_subcommand("fit", "posterior sampling on a series");
  c_fit->add_option("--input", fit.input, "series CSV");
  c_fit->add_option("--out", fit.out_dir, "output directory");
  c_fit->add_option("--d", fit.d, "lag order (0: select automatically)");
  c_fit->add_option("--m", fit.m, "tree count (0: select automatically)");
  c_fit->add_flag("--auto", fit.auto_select, "grid-select (d, m) before fitting");
  c_fit->add_option("--d-max", fit.d_max, "selection grid depth in d");
  c_fit->add_option("--m-max", fit.m_max, "selection grid depth in m");
  c_fit->add_option("--pstar", fit.p_star, "noise factor count (-1: min(5, p-1))");
  c_fit->add_option("--iters", fit.iters, "total iterations");
  c_fit->add_option("--warmup", fit.warmup, "warmup iterations");
  c_fit->add_option("--leapfrog", fit.leapfrog, "leapfrog steps per proposal");
  c_fit->add_option("--thin", fit.thin, "keep every k-th draw");
  c_fit->add_option("--target-accept", fit.target_accept, "step-size adaptation target");
  c_fit->add_option("--init-eps", fit.init_eps, "initial step size");
  c_fit->add_option("--delta", fit.delta, "edge threshold for the reported graph");
  c_fit->add_option("--seed", fit.seed, "random seed");
  c_fit->add_flag("--no-standardize", fit.no_standardize, "fit on the raw scale");
  c_fit->add_option("--jacobian", fit.jacobian, "hierarchical | pseudo");
  c_fit->add_option("--tau", fit.tau, "tree relaxation temperature");
  c_fit->add_option("--alpha-eta", fit.alpha_eta, "shrinkage shape");
  c_fit->add_option("--alpha-s", fit.alpha_s, "tree-weight concentration");
  c_fit->add_option("--a-u", fit.a_u, "edge-score Beta shape a");
  c_fit->add_option("--b-u", fit.b_u, "edge-score Beta shape b");
  c_fit->add_option("--r-decay", fit.r_decay, "lag-scale decay base");
  c_fit->add_option("--from-manifest", fit_manifest, "rerun the flags stored in a manifest");

  std::string tr_edges, tr_out;
  int tr_p = 0;
  auto* c_tr = app.add_subcommand("treerank", "tree rank of an undirected edge list");
  c_tr->add_option("--edges", tr_edges, "edge list CSV (i,j[,weight])")->required();
  c_tr->add_option("--p", tr_p, "node count override");
  c_tr->add_option("--out", tr_out, "write the report as JSON");

  std::string sel_input, sel_out;
  int sel_dmax = 3, sel_mmax = 3;
  bool sel_raw = false;
  auto* c_sel = app.add_subcommand("select", "grid selection of (d, m)");
  c_sel->add_option("--input", sel_input, "series CSV")->required();
  c_sel->add_option("--d-max", sel_dmax, "grid depth in d");
  c_sel->add_option("--m-max", sel_mmax, "grid depth in m");
  c_sel->add_flag("--no-standardize", sel_raw, "use the raw scale");
  c_sel->add_option("--out", sel_out, "surface CSV path");

  std::string bench_cfg, bench_out = "bench_out";
  auto* c_bench = app.add_subcommand("bench", "replicated simulation study");
  c_bench->add_option("--config", bench_cfg, "scenario config (key = value lines)")->required();
  c_bench->add_option("--out", bench_out, "output directory");

  std::string sum_coef, sum_truth, sum_heldout, sum_out;
  int sum_d = 1;
  double sum_lo = 0.0, sum_hi = 0.1, sum_step = 0.01;
  auto* c_sum = app.add_subcommand("summarize", "threshold sweep of a fitted coefficient matrix");
  c_sum->add_option("--coefficients", sum_coef, "stacked coefficient CSV")->required();
  c_sum->add_option("--d", sum_d, "lag order of the stacked matrix")->required();
  c_sum->add_option("--truth-edges", sum_truth, "undirected truth edge list");
  c_sum->add_option("--delta-min", sum_lo, "sweep start");
  c_sum->add_option("--delta-max", sum_hi, "sweep end");
  c_sum->add_option("--delta-step", sum_step, "sweep step");
  c_sum->add_option("--heldout", sum_heldout, "held-out series for r2");
  c_sum->add_option("--out", sum_out, "sweep CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (c_sim->parsed()) return run_simulate(sim);
    if (c_fit->parsed()) {
      if (!fit_manifest.empty()) {
        const json m = read_json(fit_manifest);
        if (m.value("command", "") != "fit") throw io_error("manifest is not from a fit run");
        FitFlags from;
        from.out_dir = fit.out_dir;  // destination stays caller-chosen
        from.from_json(m.at("flags"));
        return run_fit(from);
      }
      return run_fit(fit);
    }
    if (c_tr->parsed()) return run_treerank(tr_edges, tr_p, tr_out);
    if (c_sel->parsed()) return run_select(sel_input, sel_dmax, sel_mmax, sel_raw, sel_out);
    if (c_bench->parsed()) return run_bench(bench_cfg, bench_out);
    if (c_sum->parsed())
      return run_summarize(sum_coef, sum_d, sum_truth, sum_lo, sum_hi, sum_step, sum_heldout,
                           sum_out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.kind()) {
      case ErrorKind::io: return 2;
      case ErrorKind::infeasible: return 3;
      case ErrorKind::numerical: return 4;
      case ErrorKind::adaptation: return 5;
    }
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
