#pragma once

#include "treevar/priors.hpp"

namespace treevar {

// Handling of the tree-relaxation Jacobian in the potential: the default
// hierarchical reading treats the Beta-distributed u grid as the parameter
// (no Jacobian term); the penalized mode adds the log pseudo-determinant of
// the u -> marginals map.
enum class JacobianMode { hierarchical, pseudo };

// Flat coordinate layout of the unconstrained state:
//   [ C (per lag, column-major p x p) | log r | alr(s) | logit(u) per tree,
//     row-major over i<j | W column-major | Z column-major | log sigma2 ]
struct ModelDims {
  int p = 0, d = 0, m = 0, p_star = 0, n = 0;

  int n_c() const { return d * p * p; }
  int n_edges() const { return p * (p - 1) / 2; }
  int n_u() const { return m * n_edges(); }
  int off_c() const { return 0; }
  int off_r() const { return n_c(); }
  int off_s() const { return off_r() + d; }
  int off_u() const { return off_s() + (m - 1); }
  int off_w() const { return off_u() + n_u(); }
  int off_z() const { return off_w() + p * p_star; }
  int off_sigma() const { return off_z() + n * p_star; }
  int total() const { return off_sigma() + 1; }
  int c_index(int k, int i, int j) const { return off_c() + k * p * p + j * p + i; }
  int u_index(int l, int i, int j) const {
    return off_u() + l * n_edges() + i * p - i * (i + 1) / 2 + (j - i - 1);
  }
};

Vector to_unconstrained(const ParamState& state);
ParamState from_unconstrained(const Vector& z, const ModelDims& dims);

// log |d theta / d z| of the constraining transform at z
double transform_log_jacobian(const Vector& z, const ModelDims& dims);

// Negative log joint density of the constrained state (additive constant
// fixed to zero). Infinite when the state leaves the support.
double potential_energy(const ParamState& state, const LaggedDesign& design,
                        const HyperParams& hyper, JacobianMode mode = JacobianMode::hierarchical);

// Model bundle exposing the unconstrained potential and its gradient for the
// sampler. The potential returns +inf outside the effective support; the
// gradient throws a numerical error naming the offending coordinate, which
// the sampler wrapper converts into a rejected (divergent) proposal.
class Model {
 public:
  Model(LaggedDesign design, HyperParams hyper, int m, int p_star,
        JacobianMode mode = JacobianMode::hierarchical);

  const ModelDims& dims() const { return dims_; }
  const LaggedDesign& design() const { return design_; }
  const HyperParams& hyper() const { return hyper_; }
  JacobianMode mode() const { return mode_; }

  // potential of the reparameterized state: U(theta(z)) - log|d theta / d z|
  double potential(const Vector& z) const;
  // analytic except the penalized-mode Jacobian term (central differences)
  // and the double-Pareto |x| cusp at exactly zero (subgradient 0)
  Vector gradient(const Vector& z) const;

 private:
  LaggedDesign design_;
  HyperParams hyper_;
  ModelDims dims_;
  JacobianMode mode_;
};

// Gaussian conditional of the vectorized stacked coefficients given the noise
// covariance and the per-entry prior variances phi (in vec order of the
// (p d) x p stacked matrix): precision = Sigma^{-1} (x) X^T X + diag(phi)^{-1},
// mean = precision^{-1} vec(X^T Y Sigma^{-1}).
struct CoefficientPosterior {
  Vector mean;
  Matrix cov;
};
CoefficientPosterior conditional_c_posterior(const LaggedDesign& design, const Matrix& sigma_eps,
                                             const Vector& phi);

// vec order of the stacked coefficient matrix for a given state, matching
// conditional_c_posterior: index i * (p d) + k * p + j for entry C^(k)_ij.
Vector stacked_vec(const TransitionStack& c);

// prior variances phi in the same vec order
Vector scale_field_vec(const ScaleField& scales, int d, int p);

}  // namespace treevar
