#pragma once

#include "treevar/posterior.hpp"

namespace treevar {

struct AdmmConfig {
  // rho multiplies the mean design curvature tr(X^T X)/(p d), so the split
  // strength tracks the data scale and the iteration count stays flat in T
  double rho = 1.0;
  int max_iter = 500;
  double tol = 1e-6;
};

struct AdmmResult {
  Matrix cbar;  // (p d) x p consensus estimate (masked)
  std::vector<SpanningTree> trees;
  Matrix mask;  // p x p union of tree adjacencies with unit diagonal
  int iters = 0;
  double primal_residual = 0.0;
  bool converged = false;
  double loss = 0.0;  // 0.5 || Y - X cbar ||_F^2 at termination
};

// Tree-masked least squares: alternate the ridge-regularized coefficient
// update, re-selection of the m top edge-disjoint trees on the symmetrized
// squared magnitudes of (cbar + dual), the mask projection, and the dual
// ascent, until both || cbar - Z ||_F and the dual residual rho || dZ ||_F
// drop below tol.
AdmmResult admm_init(const LaggedDesign& design, int m, const AdmmConfig& cfg = {});

struct TwoMeansSplit {
  std::vector<int> labels;  // 0 = cluster with the smaller mean
  double mean_low = 0.0, mean_high = 0.0;
  bool degenerate = false;  // single distinct value
};

// Exact 1-D two-means: clusters are contiguous in sorted order, so the best
// of the n-1 sorted split points is optimal. Ties break to the first split.
TwoMeansSplit two_means_split(const std::vector<double>& values);

struct PlateauCell {
  int d = 0, m = 0;
  double loss = 0.0;
  bool low_cluster = false;
};

struct PlateauSurface {
  std::vector<PlateauCell> cells;  // row-major over (d, m)
  int selected_d = 1, selected_m = 1;
  bool degenerate = false;  // flat surface; selection fell back to (1,1)
};

// Fits the masked least-squares surface over the (d, m) grid on a common
// response window (all cells drop the first d_max rows) and selects the
// smallest (d + m, then d) cell inside the near-zero loss cluster.
PlateauSurface plateau_select(const Matrix& series, int d_max, int m_max,
                              const AdmmConfig& cfg = {});

struct InitOptions {
  int gd_steps = 200;
  double gd_step0 = 1e-2;
  double on_tree_u = 0.9;
  double off_tree_u = 0.1;
  std::uint64_t seed = 1;
};

// Full starting state: coefficients from the tree-masked least squares, u
// grids concentrated on the selected trees (so their maximizing tree matches),
// then the remaining components tuned by gradient descent on the potential
// with the coefficients held fixed (step halved whenever the potential rises).
struct InitialState {
  ParamState state;
  AdmmResult admm;
};
InitialState initial_state(const LaggedDesign& design, const HyperParams& hyper, int m, int p_star,
                           const InitOptions& opts = {}, const AdmmConfig& admm_cfg = {});

}  // namespace treevar
