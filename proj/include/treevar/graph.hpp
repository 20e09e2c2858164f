#pragma once

#include "treevar/common.hpp"

#include <array>
#include <utility>

namespace treevar {

using Edge = std::pair<int, int>;  // undirected, stored with first < second

// Undirected weighted graph on p nodes; weight 0 means "edge absent".
struct WeightedGraph {
  int p = 0;
  Matrix w;  // symmetric, zero diagonal, nonnegative

  WeightedGraph() = default;
  explicit WeightedGraph(const Matrix& weights);
  static WeightedGraph from_edges(int p, const std::vector<Edge>& edges);
};

struct SpanningTree {
  int p = 0;
  std::vector<Edge> edges;  // p-1 edges, sorted lexicographically

  Matrix adjacency() const;  // 0/1 symmetric
  bool contains(int i, int j) const;
};

// Maximum-weight spanning tree by Prim's method over the positive-weight
// support. Ties break toward the lexicographically smallest (i,j), so the
// result is deterministic. Throws if the support is disconnected.
// `allow_zero = true` runs over the complete graph instead (zero-weight edges
// admissible), which always succeeds for p >= 1.
SpanningTree max_spanning_tree(const WeightedGraph& g, bool allow_zero = false);

// All spanning trees of the positive-weight support (via Prufer sequences of
// the complete graph); guarded to p <= 8.
std::vector<SpanningTree> enumerate_spanning_trees(const WeightedGraph& g);

// Number of spanning trees of the 0/1 support via the matrix-tree theorem.
double count_spanning_trees(const WeightedGraph& g);

// Edge-inclusion probabilities under pr(T) ~ prod_{(i,j) in T} u_ij^{1/tau}.
struct EdgeMarginals {
  int p = 0;
  Matrix probs;  // symmetric, zero diagonal, entries in [0,1]; sums to p-1 over i<j
};

// Closed-form marginals from the matrix-tree theorem: with w = u^{1/tau},
// prob(i,j) = w_ij * (M_ii + M_jj - 2 M_ij) where M is the inverse of the
// Laplacian of w with node 0 grounded. Weights are formed in log space,
// shifted by their maximum (the marginals are scale-free), and clamped to a
// fixed window so the factorization stays well conditioned at sharp
// temperatures; marginals of clamped edges are saturated near their limit.
// Throws a numerical error if the support is disconnected.
EdgeMarginals tree_marginals(const Matrix& u, double tau);

// Workspace carrying the grounded-inverse M alongside the marginals, for
// analytic differentiation through the marginals map.
struct MarginalsWorkspace {
  EdgeMarginals marg;
  Matrix m;     // grounded inverse, zero row/col at node 0
  Matrix w;     // shifted weights actually used (log range clamped)
  Matrix free;  // 1 where the weight still responds to u, 0 where clamped
  int anchor_i = -1, anchor_j = -1;  // edge whose log weight anchors the window
};
MarginalsWorkspace tree_marginals_workspace(const Matrix& u, double tau);

// Pullback of a symmetric sensitivity g_ab = dF/dprob_ab to dF/du_ij.
// Uses dprob_ab/dw_ij = [a b == i j] R_ij - B^2 with B the grounded-inverse
// bilinear form, contracted as M L_K M with K = g o w.
Matrix marginals_pullback(const MarginalsWorkspace& ws, const Matrix& g_sens, const Matrix& u,
                          double tau);

// Dense Jacobian d vech(prob) / d vech(u) over the p(p-1)/2 edge coordinates
// (row-major over i<j). Small p only; used by the penalized sampling mode.
Matrix marginals_jacobian(const Matrix& u, double tau);

// Exact minimal number of spanning trees whose union covers all edges
// (Nash-Williams density maximized over induced subgraphs); p <= 12.
// Throws on an empty edge set.
int tree_rank_exact(const WeightedGraph& g);

// Greedy upper bound: repeatedly extract a maximum spanning tree of the
// remaining 0/1 weights (complete graph, zero edges admissible) until all
// edges are covered. Never below tree_rank_exact.
struct TreeRankBound {
  int m = 0;
  std::vector<SpanningTree> trees;
};
TreeRankBound tree_rank_upper(const WeightedGraph& g);

// F^1 = T^1 n G;  F^l = (T^l \ union of earlier forests) n G. Requires the
// tree union to cover G.
std::vector<std::vector<Edge>> forest_decomposition(const WeightedGraph& g,
                                                    const std::vector<SpanningTree>& trees);

// m edge-disjoint spanning trees extracted greedily by weight; tree l+1 is the
// maximum spanning tree of the complete graph with tree 1..l edges zeroed.
std::vector<SpanningTree> top_m_disjoint_trees(const Matrix& score, int m);

int count_components(int p, const std::vector<Edge>& edges);

}  // namespace treevar
