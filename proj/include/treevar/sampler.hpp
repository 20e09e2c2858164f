#pragma once

#include "treevar/posterior.hpp"

#include <functional>

namespace treevar {

// Generic differentiable potential on R^dim. Non-finite potential or gradient
// marks the point divergent; proposals into such regions are rejected.
struct Target {
  std::function<double(const Vector&)> potential;
  std::function<Vector(const Vector&)> gradient;
  int dim = 0;
};

struct HmcConfig {
  int n_iter = 5000;
  int n_warmup = 2500;
  int leapfrog = 32;      // jittered per iteration over [0.8 L, 1.2 L]
  double target_accept = 0.6;
  double init_eps = 0.1;
  double jitter = 0.2;
  double divergence_threshold = 1000.0;  // |energy error| beyond this rejects
  bool adapt = true;
  int thin = 1;
  int n_chains = 1;
  std::uint64_t seed = 1;
};

struct ChainDiagnostics {
  double eps = 0.0;            // step size after adaptation
  double accept_rate = 0.0;    // post-warmup mean acceptance
  int divergences = 0;         // post-warmup divergent proposals
  std::vector<double> potential_trace;  // all iterations
  std::vector<char> accept_trace;
  std::vector<double> energy_error_trace;  // |Delta H| per iteration
};

struct FlatDraws {
  std::vector<Vector> draws;  // post-warmup, thinned, chains concatenated in order
  std::vector<ChainDiagnostics> chains;
  double accept_rate() const;
};

// Velocity-form leapfrog: half kick, drift theta += eps * M v, half kick,
// repeated n_steps times. mass_inv holds the diagonal of M^{-1} (the curvature
// scale), so momenta are drawn as N(0, mass_inv) and kinetic energy is
// sum v_i^2 / (2 mass_inv_i).
struct LeapfrogResult {
  Vector z, v;
  double potential = 0.0;
  bool finite = true;
};
LeapfrogResult leapfrog(const Target& target, Vector z, Vector v, double eps, int n_steps,
                        const Vector& mass_inv);

// Diagonal curvature of the potential at z0 by central differences of the
// gradient (step fd_step), clamped to [floor_val, cap_val]; non-finite
// entries fall back to 1. The cap must admit the stiffest legitimate
// coordinates: coefficients whose shrinkage scale sits at the composite-scale
// floor carry curvature of order 1/floor^2, and under-massing them turns the
// floor into an effective step-size ceiling for the whole chain.
Vector fisher_diag_mass(const Target& target, const Vector& z0, double fd_step = 1e-4,
                        double floor_val = 1e-6, double cap_val = 1e14);

// Random-walk-free posterior exploration with dual-averaging step-size
// adaptation toward target_accept during warmup. Throws an adaptation error
// when more than half of the warmup proposals diverge or the adapted step is
// degenerate.
FlatDraws hmc_sample(const Target& target, const Vector& z0, const HmcConfig& cfg,
                     const Vector& mass_inv);

// Model-bound wrapper: builds the unconstrained target, computes the mass at
// the initial state, runs the chains, and maps draws back to parameter states.
struct PosteriorDraws {
  std::vector<ParamState> states;  // post-warmup, thinned, chains concatenated
  std::vector<ChainDiagnostics> chains;
  ModelDims dims;
  double accept_rate = 0.0;
  int divergences = 0;

  Matrix coefficient_mean() const;  // stacked (p d) x p posterior mean
};
PosteriorDraws hmc_run(const ParamState& init, const LaggedDesign& design,
                       const HyperParams& hyper, const HmcConfig& cfg,
                       JacobianMode mode = JacobianMode::hierarchical);

Target model_target(const Model& model);

}  // namespace treevar
