#pragma once

#include "treevar/graph.hpp"
#include "treevar/var.hpp"

namespace treevar {

// Shrinkage hyperparameters. r_k has an inverse-gamma prior IG(a_r, b_r(k))
// with b_r(k) = 2 * r_decay^k, so E r_k = r_decay^k decays with the lag.
struct HyperParams {
  double alpha_eta = 3.0;  // shape of the collapsed generalized-double-Pareto prior
  double a_r = 3.0;
  double r_decay = 0.1;
  double alpha_s = 0.1;  // Dirichlet concentration over tree weights
  double a_u = 1.0, b_u = 1.0;
  double tau = 0.01;  // tree relaxation temperature
  double a_sigma = 2.0, b_sigma = 1.0;

  double b_r(int k) const { return 2.0 * std::pow(r_decay, k + 1); }  // k is 0-based
  void validate() const;
};

inline int default_p_star(int p) { return std::min(5, p - 1); }

// Per-entry prior scale bookkeeping for the conditional-posterior oracle:
// var(C^(k)_ij) = eta_ijk * (r_k * tree_scale_ij)^2.
struct ScaleField {
  std::vector<Matrix> eta;  // d matrices, p x p, positive
  Vector r;                 // d
  Vector s;                 // m, simplex
  Matrix tree_scale;        // sum_l s_l A^l with unit diagonal

  double phi(int i, int j, int k) const {
    const double base = r[k] * tree_scale(i, j);
    return eta[k](i, j) * base * base;
  }
};

// Edges excluded from every tree drive the composite scale toward zero; the
// floor keeps the potential finite while sitting well below the 1e-5 weight
// threshold that declares a tree active, so a dying tree's weight can actually
// cross that threshold instead of stalling on the guard. Coefficients whose
// scale reaches the floor are effectively pinned at zero by curvature; the
// mass clamp cap is sized to resolve them.
constexpr double kTreeScaleFloor = 1e-7;

// sum_l s_l marg_l with the diagonal pinned to 1: self-lag coefficients are
// not tied to the graph, so their scale is r_k alone.
Matrix combine_tree_scale(const std::vector<EdgeMarginals>& margs, const Vector& s);

// log of the generalized double Pareto density with shape alpha:
// (2 scale / alpha)^{-1} (1 + |x|/scale)^{-(alpha+1)}. scale > 0, alpha > 0.
double gdp_log_density(double x, double scale, double alpha);

// Full parameter state of the model (the Gaussian local scales are collapsed
// into the double-Pareto form and never appear here).
struct ParamState {
  TransitionStack c;      // d lag matrices
  Vector r;               // d, positive
  Vector s;               // m, simplex
  std::vector<Matrix> u;  // m symmetric p x p, entries in (0,1), zero diagonal
  Matrix w_fac;           // p x p_star loading of the noise factor model
  Matrix z_fac;           // N x p_star factor scores
  double sigma2 = 1.0;

  int p() const { return c.p; }
  int d() const { return c.d(); }
  int m() const { return static_cast<int>(s.size()); }
  int p_star() const { return static_cast<int>(w_fac.cols()); }
  int n_rows() const { return static_cast<int>(z_fac.rows()); }

  Matrix noise_covariance() const {  // W W^T + I sigma2
    Matrix cov = Matrix::Identity(p(), p()) * sigma2;
    if (w_fac.size() > 0) cov += w_fac * w_fac.transpose();
    return cov;
  }
};

// Sum of all log prior densities (normalizing constants included), with the
// coefficient prior in its collapsed double-Pareto form evaluated at the
// relaxed tree marginals.
double log_prior(const ParamState& state, const HyperParams& hyper,
                 const std::vector<EdgeMarginals>& margs);

struct PriorDraw {
  ParamState state;
  ScaleField scales;                // discrete-tree scale field with the local eta draws
  std::vector<SpanningTree> trees;  // maximizing trees of the u grids
};

// Generative draw: u grids, maximizing trees, Dirichlet tree weights,
// lag-decay scales, local scales, coefficients, factor noise model.
PriorDraw sample_prior(const HyperParams& hyper, int p, int d, int m, int p_star, int n_rows,
                       std::uint64_t seed);

}  // namespace treevar
