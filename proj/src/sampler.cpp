#include "treevar/sampler.hpp"

namespace treevar {

double FlatDraws::accept_rate() const {
  double acc = 0.0;
  for (const auto& c : chains) acc += c.accept_rate;
  return chains.empty() ? 0.0 : acc / chains.size();
}

LeapfrogResult leapfrog(const Target& target, Vector z, Vector v, double eps, int n_steps,
                        const Vector& mass_inv) {
  LeapfrogResult out;
  Vector grad = target.gradient(z);
  for (int s = 0; s < n_steps; ++s) {
    if (!grad.allFinite()) {
      out.finite = false;
      break;
    }
    v.noalias() -= 0.5 * eps * grad;
    z.array() += eps * v.array() / mass_inv.array();
    grad = target.gradient(z);
    if (!grad.allFinite()) {
      out.finite = false;
      break;
    }
    v.noalias() -= 0.5 * eps * grad;
  }
  out.z = std::move(z);
  out.v = std::move(v);
  if (out.finite) {
    out.potential = target.potential(out.z);
    out.finite = std::isfinite(out.potential);
  }
  return out;
}

Vector fisher_diag_mass(const Target& target, const Vector& z0, double fd_step, double floor_val,
                        double cap_val) {
  const int dim = target.dim;
  Vector mass(dim);
  Vector z = z0;
  for (int i = 0; i < dim; ++i) {
    z[i] = z0[i] + fd_step;
    const Vector gp = target.gradient(z);
    z[i] = z0[i] - fd_step;
    const Vector gm = target.gradient(z);
    z[i] = z0[i];
    double curv = (gp[i] - gm[i]) / (2.0 * fd_step);
    if (!std::isfinite(curv)) curv = 1.0;
    mass[i] = std::clamp(std::abs(curv), floor_val, cap_val);
  }
  return mass;
}

namespace {

double kinetic(const Vector& v, const Vector& mass_inv) {
  return 0.5 * (v.array().square() / mass_inv.array()).sum();
}

// Nesterov-style averaging of log step size toward the target acceptance
struct DualAverage {
  double mu, log_eps, log_eps_bar = 0.0, h_bar = 0.0;
  double gamma = 0.05, t0 = 10.0, kappa = 0.75;
  int t = 0;

  explicit DualAverage(double eps0) : mu(std::log(10.0 * eps0)), log_eps(std::log(eps0)) {}
  void update(double accept_prob, double target) {
    ++t;
    const double eta = 1.0 / (t + t0);
    h_bar = (1.0 - eta) * h_bar + eta * (target - accept_prob);
    log_eps = mu - std::sqrt(static_cast<double>(t)) / gamma * h_bar;
    const double w = std::pow(static_cast<double>(t), -kappa);
    log_eps_bar = w * log_eps + (1.0 - w) * log_eps_bar;
  }
  double current() const { return std::exp(log_eps); }
  double averaged() const { return std::exp(log_eps_bar); }
};

ChainDiagnostics run_chain(const Target& target, const Vector& z0, const HmcConfig& cfg,
                           const Vector& mass_inv, std::uint64_t seed,
                           std::vector<Vector>& draws_out) {
  RngStream rng(seed);
  ChainDiagnostics diag;
  Vector z = z0;
  double u_cur = target.potential(z);
  if (!std::isfinite(u_cur))
    throw adaptation_error("hmc: initial state has non-finite potential");
  DualAverage da(cfg.init_eps);
  double eps = cfg.init_eps;
  const int lo_steps = std::max(1, static_cast<int>(std::lround((1.0 - cfg.jitter) * cfg.leapfrog)));
  const int hi_steps = std::max(lo_steps, static_cast<int>(std::lround((1.0 + cfg.jitter) * cfg.leapfrog)));
  int warmup_div = 0, post_accepts = 0, post_total = 0;
  diag.potential_trace.reserve(cfg.n_iter);
  for (int it = 0; it < cfg.n_iter; ++it) {
    const bool warm = it < cfg.n_warmup;
    if (cfg.adapt) eps = warm ? da.current() : da.averaged();
    Vector v(target.dim);
    for (int i = 0; i < target.dim; ++i) v[i] = std::sqrt(mass_inv[i]) * rng.normal();
    const double h0 = u_cur + kinetic(v, mass_inv);
    const int n_steps = lo_steps + rng.uniform_int(hi_steps - lo_steps + 1);
    const LeapfrogResult prop = leapfrog(target, z, v, eps, n_steps, mass_inv);
    double delta_h = std::numeric_limits<double>::infinity();
    if (prop.finite) delta_h = (prop.potential + kinetic(prop.v, mass_inv)) - h0;
    const bool divergent =
        !std::isfinite(delta_h) || std::abs(delta_h) > cfg.divergence_threshold;
    const double accept_prob = divergent ? 0.0 : std::min(1.0, std::exp(-delta_h));
    bool accepted = false;
    if (!divergent && std::log(rng.uniform()) < -delta_h) {
      z = prop.z;
      u_cur = prop.potential;
      accepted = true;
    }
    if (warm) {
      if (cfg.adapt) da.update(accept_prob, cfg.target_accept);
      if (divergent) ++warmup_div;
    } else {
      post_total += 1;
      post_accepts += accepted ? 1 : 0;
      if (divergent) ++diag.divergences;
      if ((it - cfg.n_warmup) % cfg.thin == 0) draws_out.push_back(z);
    }
    diag.potential_trace.push_back(u_cur);
    diag.accept_trace.push_back(accepted ? 1 : 0);
    diag.energy_error_trace.push_back(std::isfinite(delta_h) ? std::abs(delta_h)
                                                             : std::numeric_limits<double>::infinity());
  }
  if (cfg.n_warmup > 0 && warmup_div * 2 > cfg.n_warmup)
    throw adaptation_error("hmc: more than half of warmup proposals diverged; reduce init_eps");
  diag.eps = eps;
  if (cfg.adapt && (!std::isfinite(diag.eps) || diag.eps <= 0.0))
    throw adaptation_error("hmc: step-size adaptation collapsed");
  diag.accept_rate = post_total > 0 ? static_cast<double>(post_accepts) / post_total : 0.0;
  return diag;
}

}  // namespace

FlatDraws hmc_sample(const Target& target, const Vector& z0, const HmcConfig& cfg,
                     const Vector& mass_inv) {
  if (z0.size() != target.dim || mass_inv.size() != target.dim)
    throw infeasible_error("hmc_sample: dimension mismatch");
  if (cfg.n_iter <= cfg.n_warmup || cfg.n_warmup < 0 || cfg.leapfrog < 1 || cfg.thin < 1 ||
      cfg.n_chains < 1 || !(cfg.init_eps > 0))
    throw infeasible_error("hmc_sample: invalid configuration");
  FlatDraws out;
  for (int chain = 0; chain < cfg.n_chains; ++chain) {
    const std::uint64_t seed = cfg.n_chains == 1 ? cfg.seed : derive_seed(cfg.seed, chain);
    out.chains.push_back(run_chain(target, z0, cfg, mass_inv, seed, out.draws));
  }
  return out;
}

Target model_target(const Model& model) {
  Target t;
  t.dim = model.dims().total();
  t.potential = [&model](const Vector& z) { return model.potential(z); };
  // gradient failures mark the point divergent instead of aborting the chain
  t.gradient = [&model, dim = t.dim](const Vector& z) -> Vector {
    try {
      return model.gradient(z);
    } catch (const Error&) {
      return Vector::Constant(dim, std::numeric_limits<double>::quiet_NaN());
    }
  };
  return t;
}

Matrix PosteriorDraws::coefficient_mean() const {
  if (states.empty()) throw infeasible_error("coefficient_mean: no draws");
  Matrix acc = Matrix::Zero(dims.p * dims.d, dims.p);
  for (const auto& st : states) acc += st.c.stacked();
  return acc / static_cast<double>(states.size());
}

PosteriorDraws hmc_run(const ParamState& init, const LaggedDesign& design,
                       const HyperParams& hyper, const HmcConfig& cfg, JacobianMode mode) {
  Model model(design, hyper, init.m(), init.p_star(), mode);
  const Target target = model_target(model);
  const Vector z0 = to_unconstrained(init);
  const Vector mass_inv = fisher_diag_mass(target, z0);
  FlatDraws flat = hmc_sample(target, z0, cfg, mass_inv);
  PosteriorDraws out;
  out.dims = model.dims();
  out.chains = std::move(flat.chains);
  out.states.reserve(flat.draws.size());
  for (const auto& z : flat.draws) out.states.push_back(from_unconstrained(z, out.dims));
  double acc = 0.0;
  for (const auto& c : out.chains) {
    acc += c.accept_rate;
    out.divergences += c.divergences;
  }
  out.accept_rate = out.chains.empty() ? 0.0 : acc / out.chains.size();
  return out;
}

}  // namespace treevar
