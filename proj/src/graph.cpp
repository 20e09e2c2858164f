#include "treevar/graph.hpp"

#include <algorithm>
#include <numeric>

namespace treevar {

namespace {

void require_square_symmetric(const Matrix& w, const char* what) {
  if (w.rows() != w.cols()) throw infeasible_error(std::string(what) + ": matrix must be square");
  for (int i = 0; i < w.rows(); ++i) {
    if (w(i, i) != 0.0) throw infeasible_error(std::string(what) + ": diagonal must be zero");
    for (int j = i + 1; j < w.cols(); ++j)
      if (w(i, j) != w(j, i)) throw infeasible_error(std::string(what) + ": matrix must be symmetric");
  }
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[std::max(a, b)] = std::min(a, b);
    return true;
  }
};

}  // namespace

WeightedGraph::WeightedGraph(const Matrix& weights) {
  require_square_symmetric(weights, "WeightedGraph");
  if ((weights.array() < 0.0).any()) throw infeasible_error("WeightedGraph: negative weight");
  p = static_cast<int>(weights.rows());
  w = weights;
}

WeightedGraph WeightedGraph::from_edges(int p_, const std::vector<Edge>& edges) {
  Matrix w = Matrix::Zero(p_, p_);
  for (const auto& [i, j] : edges) {
    if (i == j || i < 0 || j < 0 || i >= p_ || j >= p_)
      throw infeasible_error("from_edges: edge endpoint out of range");
    w(i, j) = w(j, i) = 1.0;
  }
  return WeightedGraph(w);
}

Matrix SpanningTree::adjacency() const {
  Matrix a = Matrix::Zero(p, p);
  for (const auto& [i, j] : edges) a(i, j) = a(j, i) = 1.0;
  return a;
}

bool SpanningTree::contains(int i, int j) const {
  const Edge e{std::min(i, j), std::max(i, j)};
  return std::binary_search(edges.begin(), edges.end(), e);
}

SpanningTree max_spanning_tree(const WeightedGraph& g, bool allow_zero) {
  const int p = g.p;
  SpanningTree t;
  t.p = p;
  if (p <= 1) return t;
  std::vector<char> in_tree(p, 0);
  in_tree[0] = 1;
  for (int step = 1; step < p; ++step) {
    double best_w = -1.0;
    Edge best{-1, -1};
    int attach = -1;
    for (int a = 0; a < p; ++a) {
      if (!in_tree[a]) continue;
      for (int b = 0; b < p; ++b) {
        if (in_tree[b]) continue;
        const double wab = g.w(a, b);
        if (!allow_zero && wab <= 0.0) continue;
        const Edge cand{std::min(a, b), std::max(a, b)};
        if (wab > best_w || (wab == best_w && cand < best)) {
          best_w = wab;
          best = cand;
          attach = b;
        }
      }
    }
    if (attach < 0)
      throw infeasible_error("max_spanning_tree: positive-weight support is disconnected");
    in_tree[attach] = 1;
    t.edges.push_back(best);
  }
  std::sort(t.edges.begin(), t.edges.end());
  return t;
}

namespace {

// standard sequence -> labeled tree bijection
std::vector<Edge> prufer_decode(const std::vector<int>& seq, int p) {
  std::vector<int> deg(p, 1);
  for (int x : seq) ++deg[x];
  std::vector<Edge> edges;
  edges.reserve(p - 1);
  for (int x : seq) {
    for (int v = 0; v < p; ++v) {
      if (deg[v] == 1) {
        edges.emplace_back(std::min(v, x), std::max(v, x));
        --deg[v];
        --deg[x];
        break;
      }
    }
  }
  int a = -1, b = -1;
  for (int v = 0; v < p; ++v)
    if (deg[v] == 1) (a < 0 ? a : b) = v;
  edges.emplace_back(a, b);
  return edges;
}

}  // namespace

std::vector<SpanningTree> enumerate_spanning_trees(const WeightedGraph& g) {
  const int p = g.p;
  if (p > 8) throw infeasible_error("enumerate_spanning_trees: p > 8 (use the matrix-tree count)");
  std::vector<SpanningTree> out;
  if (p == 1) {
    out.push_back(SpanningTree{1, {}});
    return out;
  }
  if (p == 2) {
    if (g.w(0, 1) > 0.0) out.push_back(SpanningTree{2, {{0, 1}}});
    return out;
  }
  std::vector<int> seq(p - 2, 0);
  for (;;) {
    auto edges = prufer_decode(seq, p);
    bool ok = true;
    for (const auto& [i, j] : edges)
      if (g.w(i, j) <= 0.0) {
        ok = false;
        break;
      }
    if (ok) {
      std::sort(edges.begin(), edges.end());
      out.push_back(SpanningTree{p, std::move(edges)});
    }
    int k = p - 3;
    while (k >= 0 && seq[k] == p - 1) seq[k--] = 0;
    if (k < 0) break;
    ++seq[k];
  }
  return out;
}

double count_spanning_trees(const WeightedGraph& g) {
  const int p = g.p;
  if (p <= 1) return 1.0;
  Matrix a = (g.w.array() > 0.0).cast<double>();
  Matrix lap = Matrix(a.rowwise().sum().asDiagonal()) - a;
  return lap.bottomRightCorner(p - 1, p - 1).determinant();
}

namespace {

// Marginals are invariant under a common log-shift, so only relative log
// weights matter. Sharp temperatures spread them over hundreds of nats, which
// makes the reduced Laplacian numerically singular; weights more than
// kLogWeightWindow nats below the maximum are therefore lifted onto the
// window edge and marked frozen for the pullback. The window trades a bounded
// value distortion (~e^-14 on already-saturated marginals) for conditioning:
// the Laplacian condition number stays near e^window, keeping the solved
// marginals and the pullback contraction accurate to ~1e-9 absolute, which the
// sharp-temperature chain rule amplifies by 1/(tau u) without breaching 1e-5.
constexpr double kLogWeightWindow = 14.0;

struct ShiftedWeights {
  Matrix w;     // clamped weights, log range [-window/2, +window/2]
  Matrix free;  // 1 where the weight still responds to u, 0 where clamped
  int anchor_i = -1, anchor_j = -1;  // argmax edge defining the shift
};

ShiftedWeights shifted_weights(const Matrix& u, double tau, int p) {
  double mx = -std::numeric_limits<double>::infinity();
  ShiftedWeights out;
  Matrix lw = Matrix::Constant(p, p, -std::numeric_limits<double>::infinity());
  for (int i = 0; i < p; ++i)
    for (int j = i + 1; j < p; ++j) {
      const double uij = u(i, j);
      if (uij <= 0.0) continue;  // absent edge
      if (uij > 1.0) throw infeasible_error("tree_marginals: u entries must lie in (0,1]");
      const double l = std::log(uij) / tau;
      lw(i, j) = lw(j, i) = l;
      if (l > mx) {
        mx = l;
        out.anchor_i = i;
        out.anchor_j = j;
      }
    }
  if (!std::isfinite(mx)) throw infeasible_error("tree_marginals: graph has no edges");
  out.w = Matrix::Zero(p, p);
  out.free = Matrix::Zero(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = i + 1; j < p; ++j) {
      if (!std::isfinite(lw(i, j))) continue;
      const double rel = lw(i, j) - mx;
      const bool clamped = rel < -kLogWeightWindow;
      const double val = std::exp((clamped ? -kLogWeightWindow : rel) + 0.5 * kLogWeightWindow);
      out.w(i, j) = out.w(j, i) = val;
      out.free(i, j) = out.free(j, i) = clamped ? 0.0 : 1.0;
    }
  return out;
}

}  // namespace

MarginalsWorkspace tree_marginals_workspace(const Matrix& u, double tau) {
  if (u.rows() != u.cols()) throw infeasible_error("tree_marginals: u must be square");
  if (!(tau > 0.0) || tau > 1.0) throw infeasible_error("tree_marginals: tau must lie in (0,1]");
  const int p = static_cast<int>(u.rows());
  MarginalsWorkspace ws;
  ws.marg.p = p;
  ws.marg.probs = Matrix::Zero(p, p);
  ws.m = Matrix::Zero(p, p);
  ws.w = Matrix::Zero(p, p);
  ws.free = Matrix::Zero(p, p);
  if (p <= 1) return ws;
  ShiftedWeights sw = shifted_weights(u, tau, p);
  ws.w = std::move(sw.w);
  ws.free = std::move(sw.free);
  ws.anchor_i = sw.anchor_i;
  ws.anchor_j = sw.anchor_j;
  Matrix lap = Matrix(ws.w.rowwise().sum().asDiagonal()) - ws.w;
  Eigen::LLT<Matrix> llt(lap.bottomRightCorner(p - 1, p - 1));
  if (llt.info() != Eigen::Success)
    throw numerical_error("tree_marginals: reduced Laplacian is singular (support disconnected)");
  const Matrix minv = llt.solve(Matrix::Identity(p - 1, p - 1));
  ws.m.bottomRightCorner(p - 1, p - 1) = 0.5 * (minv + minv.transpose());
  for (int i = 0; i < p; ++i)
    for (int j = i + 1; j < p; ++j) {
      const double r = ws.m(i, i) + ws.m(j, j) - 2.0 * ws.m(i, j);
      const double prob = std::clamp(ws.w(i, j) * r, 0.0, 1.0);
      ws.marg.probs(i, j) = ws.marg.probs(j, i) = prob;
    }
  return ws;
}

EdgeMarginals tree_marginals(const Matrix& u, double tau) {
  return tree_marginals_workspace(u, tau).marg;
}

Matrix marginals_pullback(const MarginalsWorkspace& ws, const Matrix& g_sens, const Matrix& u,
                          double tau) {
  const int p = ws.marg.p;
  Matrix k = g_sens.cwiseProduct(ws.w);
  Matrix lap_k = Matrix(k.rowwise().sum().asDiagonal()) - k;
  Matrix dmat = ws.m * lap_k * ws.m;
  // In log-weight coordinates the sensitivity is a covariance of edge
  // indicators under the tree measure: dF/dlog w_ij = Cov(G, 1_ij) with
  // G = sum g_ab 1_ab, so |dF/dlog w_ij| <= sd(G) sd(1_ij). At sharp
  // temperatures the M L_K M contraction cancels catastrophically on
  // saturated edges (true value ~ 0, weights spanning hundreds of nats);
  // clamping to the bound removes that noise and cannot move a correct value.
  double sd_g = 0.0;
  for (int i = 0; i < p; ++i)
    for (int j = i + 1; j < p; ++j) {
      const double pr = ws.marg.probs(i, j);
      sd_g += std::abs(g_sens(i, j)) * std::sqrt(std::max(pr * (1.0 - pr), 0.0));
    }
  // The anchor's shifted log weight sits pinned at the window top and frozen
  // edges sit pinned at the floor, so raising the anchor's u only lowers the
  // other free log weights: its sensitivity is minus their total. Summing
  // those well-conditioned terms also sidesteps the anchor's own M L_K M
  // contraction, which is pure cancellation noise once its marginal saturates.
  Matrix out = Matrix::Zero(p, p);
  double free_sum = 0.0;
  for (int i = 0; i < p; ++i)
    for (int j = i + 1; j < p; ++j) {
      if (ws.w(i, j) <= 0.0 || ws.free(i, j) == 0.0) continue;
      if (i == ws.anchor_i && j == ws.anchor_j) continue;
      const double r = ws.m(i, i) + ws.m(j, j) - 2.0 * ws.m(i, j);
      const double dfdw = g_sens(i, j) * r - (dmat(i, i) + dmat(j, j) - 2.0 * dmat(i, j));
      const double pr = ws.marg.probs(i, j);
      const double bound = sd_g * std::sqrt(std::max(pr * (1.0 - pr), 0.0));
      const double dfdlogw = std::clamp(dfdw * ws.w(i, j), -bound, bound);
      free_sum += dfdlogw;
      out(i, j) = out(j, i) = dfdlogw / (tau * u(i, j));
    }
  if (ws.anchor_i >= 0) {
    const int ai = ws.anchor_i, aj = ws.anchor_j;
    out(ai, aj) = out(aj, ai) = -free_sum / (tau * u(ai, aj));
  }
  return out;
}

Matrix marginals_jacobian(const Matrix& u, double tau) {
  const MarginalsWorkspace ws = tree_marginals_workspace(u, tau);
  const int p = ws.marg.p;
  const int ne = p * (p - 1) / 2;
  auto eidx = [p](int i, int j) { return i * p - i * (i + 1) / 2 + (j - i - 1); };
  Matrix jac = Matrix::Zero(ne, ne);
  Vector free_col = Vector::Zero(ne);  // summed dprob/dlog w over free non-anchor edges
  for (int i = 0; i < p; ++i)
    for (int j = i + 1; j < p; ++j) {
      if (ws.w(i, j) <= 0.0 || ws.free(i, j) == 0.0) continue;
      if (i == ws.anchor_i && j == ws.anchor_j) continue;
      const double r_ij = ws.m(i, i) + ws.m(j, j) - 2.0 * ws.m(i, j);
      for (int a = 0; a < p; ++a)
        for (int b = a + 1; b < p; ++b) {
          const double bform =
              ws.m(a, i) - ws.m(a, j) - ws.m(b, i) + ws.m(b, j);
          double d = -ws.w(a, b) * bform * bform;
          if (a == i && b == j) d += r_ij;
          const double dlogw = d * ws.w(i, j);
          free_col[eidx(a, b)] += dlogw;
          jac(eidx(a, b), eidx(i, j)) = dlogw / (tau * u(i, j));
        }
    }
  // the anchor's shifted log weight is pinned at the window top, so its u
  // moves the marginals only by lowering the other free log weights
  if (ws.anchor_i >= 0)
    jac.col(eidx(ws.anchor_i, ws.anchor_j)) =
        -free_col / (tau * u(ws.anchor_i, ws.anchor_j));
  return jac;
}

int tree_rank_exact(const WeightedGraph& g) {
  const int p = g.p;
  if (p > 12) throw infeasible_error("tree_rank_exact: p > 12, use tree_rank_upper");
  std::vector<std::uint32_t> adj(p, 0);
  int total_edges = 0;
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j)
      if (i != j && g.w(i, j) > 0.0) {
        adj[i] |= (1u << j);
        if (i < j) ++total_edges;
      }
  if (total_edges == 0) throw infeasible_error("tree_rank_exact: empty edge set has no tree rank");
  // maximum over induced subgraphs of ceil(|E_H| / (|V_H| - 1))
  int rank = 1;
  for (std::uint32_t s = 1; s < (1u << p); ++s) {
    const int nv = __builtin_popcount(s);
    if (nv < 2) continue;
    int ne = 0;
    for (int v = 0; v < p; ++v)
      if (s & (1u << v)) ne += __builtin_popcount(adj[v] & s);
    ne /= 2;
    if (ne == 0) continue;
    rank = std::max(rank, (ne + nv - 2) / (nv - 1));
  }
  return rank;
}

TreeRankBound tree_rank_upper(const WeightedGraph& g) {
  const int p = g.p;
  Matrix w = (g.w.array() > 0.0).cast<double>();
  if (w.sum() == 0.0) throw infeasible_error("tree_rank_upper: empty edge set has no tree rank");
  TreeRankBound out;
  int guard = p * p + 1;
  while (w.sum() > 0.0 && guard-- > 0) {
    SpanningTree t = max_spanning_tree(WeightedGraph(w), /*allow_zero=*/true);
    for (const auto& [i, j] : t.edges) w(i, j) = w(j, i) = 0.0;
    out.trees.push_back(std::move(t));
  }
  if (w.sum() > 0.0) throw numerical_error("tree_rank_upper: cover loop failed to terminate");
  out.m = static_cast<int>(out.trees.size());
  return out;
}

std::vector<std::vector<Edge>> forest_decomposition(const WeightedGraph& g,
                                                    const std::vector<SpanningTree>& trees) {
  const int p = g.p;
  Matrix covered = Matrix::Zero(p, p);
  std::vector<std::vector<Edge>> forests;
  forests.reserve(trees.size());
  for (const auto& t : trees) {
    std::vector<Edge> f;
    for (const auto& [i, j] : t.edges)
      if (g.w(i, j) > 0.0 && covered(i, j) == 0.0) {
        f.emplace_back(i, j);
        covered(i, j) = covered(j, i) = 1.0;
      }
    forests.push_back(std::move(f));
  }
  for (int i = 0; i < p; ++i)
    for (int j = i + 1; j < p; ++j)
      if (g.w(i, j) > 0.0 && covered(i, j) == 0.0)
        throw infeasible_error("forest_decomposition: trees do not cover the graph");
  return forests;
}

std::vector<SpanningTree> top_m_disjoint_trees(const Matrix& score, int m) {
  WeightedGraph g(score);
  const int p = g.p;
  if (m < 1 || m > p / 2)
    throw infeasible_error("top_m_disjoint_trees: m must lie in [1, floor(p/2)]");
  Matrix w = g.w;
  std::vector<SpanningTree> out;
  out.reserve(m);
  for (int l = 0; l < m; ++l) {
    SpanningTree t = max_spanning_tree(WeightedGraph(w), /*allow_zero=*/true);
    for (const auto& [i, j] : t.edges) w(i, j) = w(j, i) = 0.0;
    out.push_back(std::move(t));
  }
  return out;
}

int count_components(int p, const std::vector<Edge>& edges) {
  UnionFind uf(p);
  int comps = p;
  for (const auto& [i, j] : edges)
    if (uf.unite(i, j)) --comps;
  return comps;
}

}  // namespace treevar
