#pragma once

#include "treevar/common.hpp"

namespace treevar {

// Lag-k coefficient matrices of y_t = sum_k C[k-1] y_{t-k} + eps_t.
// coef[k](i,j) is the effect of series j at lag k+1 on series i.
struct TransitionStack {
  int p = 0;
  std::vector<Matrix> coef;

  TransitionStack() = default;
  TransitionStack(int d_, int p_) : p(p_), coef(d_, Matrix::Zero(p_, p_)) {}
  int d() const { return static_cast<int>(coef.size()); }

  // flat (p*d) x p layout with lag-k block holding coef[k]^T, so that
  // Y = X * stacked() for the lagged design below
  Matrix stacked() const;
  static TransitionStack from_stacked(const Matrix& cbar, int d);
};

struct TimeSeries {
  Matrix data;  // T x p, ascending time
  bool standardized = false;
  Vector center;  // per-column shift removed (empty if raw)
  Vector scale;   // per-column scale removed (empty if raw)

  int T() const { return static_cast<int>(data.rows()); }
  int p() const { return static_cast<int>(data.cols()); }
};

// Row-degree diagnostics for the sufficient stability bound.
struct StabilityReport {
  Vector degrees_star;   // row sums of the symmetrized magnitude matrix
  Vector degrees_dstar;  // row sums of the asymmetry-corrected magnitude matrix
  double g0 = 0.0;       // correction constant -0.4 - 0.61/d
  double bound = 0.0;    // 1/sqrt(d)
  bool pass = false;     // max(degrees) < bound for both
  double margin() const {
    return bound - std::max(degrees_star.maxCoeff(), degrees_dstar.maxCoeff());
  }
};

// Sufficient (not necessary) stationarity bound from the row sums of the two
// symmetrized coefficient-magnitude matrices.
StabilityReport check_stability_sufficient(const TransitionStack& c);

// Spectral radius of the (p*d) x (p*d) companion matrix; < 1 iff stable.
double companion_spectral_radius(const TransitionStack& c);

// Simulates T observations after discarding `burnin` steps from a zero start.
// noise_cov must be symmetric positive definite; the companion spectral radius
// must be < 1.
TimeSeries simulate_var(const TransitionStack& c, const Matrix& noise_cov, int T,
                        std::uint64_t seed, int burnin = 200);

// As above but continues from the last d rows of `history` with no burn-in.
Matrix simulate_var_from(const TransitionStack& c, const Matrix& noise_cov,
                         const Matrix& history, int H, std::uint64_t seed);

struct LaggedDesign {
  Matrix Y;  // (T-d) x p responses; row t is the observation at time d+t
  Matrix X;  // (T-d) x (p*d); row t is [y_{d+t-1}, ..., y_{d+t-d}]
  int d = 0;
  int p = 0;
  int N() const { return static_cast<int>(Y.rows()); }
};

// Requires T > d (at least one usable row). `drop_head` discards additional
// leading responses so surfaces over different d share a response window.
LaggedDesign build_lagged_design(const Matrix& series, int d, int drop_head = 0);

// Column-wise centering/scaling to mean 0, unit sample variance (T-1 in the
// denominator); retains the removed factors for back-transformation.
TimeSeries standardize(const Matrix& series);

// C_std[k](i,j) fitted on standardized data maps back to the source scale as
// scale_i * C_std[k](i,j) / scale_j.
TransitionStack unstandardize_coefficients(const TransitionStack& c, const Vector& scale);

}  // namespace treevar
