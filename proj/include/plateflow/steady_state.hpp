#pragma once

#include "plateflow/dynamics.hpp"

#include <algorithm>
#include <random>
#include <sstream>

namespace plateflow::steady {

using galerkin::GalerkinSystem;
using forces::ForceModel;
using mesh::PlateFunction;
using mesh::VelocityField;
using mesh::Grid;

inline constexpr double stat_tol = 1e-8;

struct StationaryStokes {
  VelocityField v_star;
  PlateFunction p_star;  // zero-mean pressure trace
};

// −νΔv + ∇p = G0, div v = 0, v = 0 on the whole boundary. The trace is the
// boundary reaction on the elastic faces, so (p*, b) = (G0, N0 b) for
// zero-mean b.
inline StationaryStokes solve_stationary_stokes(const VelocityField& g0, const modal::FluidOperators& ops, double nu = 1.0) {
  if (!(nu > 0.0)) throw std::invalid_argument("nu must be positive");
  const Grid& g = ops.grid();
  mesh::check_conforming(g0, g);
  const Vector w = g.face_weights().cwiseProduct(g0.values);
  const Vector s = ops.solve_stream(ops.interior_curl().transpose() * w) / nu;
  StationaryStokes out;
  out.v_star.values = ops.interior_curl() * s;
  const Vector reaction = w - nu * (g.dirichlet_form() * out.v_star.values);
  // pressure balancing the reaction on interior faces
  const Vector p = ops.recover_pressure(reaction) * g.cell_weight();
  const Vector dtp = g.divergence().transpose() * p;
  out.p_star.values.resize(g.nx());
  for (int i = 0; i < g.nx(); ++i) {
    const int f = g.elastic_faces()[i];
    out.p_star.values[i] = (reaction[f] - dtp[f]) / g.hx();
  }
  modal::detail::zero_mean(out.p_star.values);
  return out;
}

struct Equilibrium {
  VelocityField v_star;
  PlateFunction p_star;
  PlateFunction u_bar;
  Vector alpha_star;  // fluid mode coefficients of v*
  Vector beta;        // plate mode coefficients of ū
  double residual = 0.0;
  double energy = 0.0;  // Ψ(ū), equal to E* at the equilibrium state
};

// load c_j = (p* + G_pl, ξ_j)
inline Vector stationary_load(const GalerkinSystem& sys, const PlateFunction& p_star, const PlateFunction* plate_load = nullptr) {
  Vector load = p_star.values;
  if (load.size() != sys.plate().size()) throw std::invalid_argument("pressure trace does not match the plate grid");
  if (plate_load) {
    mesh::check_conforming(*plate_load, sys.plate());
    load += plate_load->values;
  }
  return sys.plate().spacing() * (sys.plate_basis().transpose() * load);
}

// (Δu, Δξ_j) + (F(u) − p* − G_pl, ξ_j) over the plate modes
inline double stationary_residual(const PlateFunction& u, const PlateFunction& p_star, const ForceModel& model,
                                  const GalerkinSystem& sys, const PlateFunction* plate_load = nullptr) {
  mesh::check_conforming(u, sys.plate());
  const Matrix& xi = sys.plate_basis();
  Vector r = xi.transpose() * (sys.plate().bending() * u.values) + galerkin::projected_force(sys, model, u.values) -
             stationary_load(sys, p_star, plate_load);
  return r.norm();
}

// Ψ(β) = ½βᵀKβ + Π(Ξβ) − c·β in plate mode coordinates
class StationaryFunctional {
 public:
  StationaryFunctional(const GalerkinSystem& sys, ForceModel model, Vector load)
      : sys_(&sys), model_(std::move(model)), load_(std::move(load)) {
    galerkin::require_beam_model(sys, model_);
  }
  double value(const Vector& b) const {
    const Vector u = sys_->plate_basis() * b;
    return 0.5 * b.dot(sys_->stiffness() * b) + (model_.is_none() ? 0.0 : forces::potential_value(model_, u)) - load_.dot(b);
  }
  Vector gradient(const Vector& b) const {
    return sys_->stiffness() * b + galerkin::projected_force(*sys_, model_, sys_->plate_basis() * b) - load_;
  }
  // central differences of the gradient, symmetrized
  Matrix hessian(const Vector& b) const {
    const int n = static_cast<int>(b.size());
    Matrix h(n, n);
    if (model_.is_none()) return sys_->stiffness();
    for (int j = 0; j < n; ++j) {
      const double d = 1e-6 * std::max(1.0, std::abs(b[j]));
      Vector bp = b, bm = b;
      bp[j] += d;
      bm[j] -= d;
      h.col(j) = (gradient(bp) - gradient(bm)) / (2.0 * d);
    }
    return 0.5 * (h + h.transpose());
  }
  const Vector& load() const { return load_; }

 private:
  const GalerkinSystem* sys_;
  ForceModel model_;
  Vector load_;
};

struct DescentResult {
  Vector beta;
  double residual = 0.0;
  double value = 0.0;
  bool converged = false;
};

// Preconditioned gradient descent with Armijo backtracking, then Newton.
inline DescentResult descend(const StationaryFunctional& psi, const Matrix& precond, Vector b, int max_descent = 2000,
                             int max_newton = 50) {
  const Eigen::LLT<Matrix> pre(precond);
  double f = psi.value(b);
  Vector g = psi.gradient(b);
  for (int it = 0; it < max_descent && g.norm() > 1e-6 * (1.0 + psi.load().norm()); ++it) {
    const Vector d = -pre.solve(g);
    const double slope = g.dot(d);
    double step = 1.0;
    bool moved = false;
    for (int k = 0; k < 60; ++k, step *= 0.5) {
      const Vector trial = b + step * d;
      const double ft = psi.value(trial);
      if (ft <= f + 1e-4 * step * slope) {
        b = trial;
        f = ft;
        moved = true;
        break;
      }
    }
    if (!moved) break;
    g = psi.gradient(b);
  }
  for (int it = 0; it < max_newton && g.norm() > stat_tol; ++it) {
    const Matrix h = psi.hessian(b);
    const Vector d = -h.ldlt().solve(g);
    // backtrack on the residual norm
    double step = 1.0;
    const double g0 = g.norm();
    for (int k = 0; k < 40; ++k, step *= 0.5) {
      const Vector trial = b + step * d;
      const Vector gt = psi.gradient(trial);
      if (gt.norm() < g0) {
        b = trial;
        g = gt;
        break;
      }
    }
    if (g.norm() >= g0) break;
  }
  DescentResult r;
  r.beta = b;
  r.residual = g.norm();
  r.value = psi.value(b);
  r.converged = r.residual <= stat_tol;
  return r;
}

struct MinimizeOptions {
  int starts = 8;
  std::uint64_t seed = 1;
  double start_scale = 1.0;
  bool check_coercivity = true;
};

// Distinct stationary points found from u_init and random starts, sorted by Ψ.
inline std::vector<Equilibrium> minimize_stationary_all(const ForceModel& model, const StationaryStokes& stokes,
                                                        const GalerkinSystem& sys, const Vector* beta_init = nullptr,
                                                        const PlateFunction* plate_load = nullptr,
                                                        const MinimizeOptions& opt = {}) {
  if (opt.check_coercivity && !model.is_none()) {
    const auto rep = forces::verify_coercivity(model, 10, opt.seed);
    if (!rep.pass) throw std::invalid_argument("force model " + model.name() + " failed the coercivity check");
  }
  const int n = sys.n();
  const StationaryFunctional psi(sys, model, stationary_load(sys, stokes.p_star, plate_load));
  std::vector<Vector> starts;
  starts.push_back(beta_init ? *beta_init : Vector::Zero(n));
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> nd;
  for (int s = 1; s < opt.starts; ++s) {
    Vector b(n);
    for (int j = 0; j < n; ++j) b[j] = opt.start_scale * nd(rng) / std::sqrt(sys.basis().plate_modes[j].kappa);
    starts.push_back(b);
  }
  const Vector alpha = sys.fluid_basis().leftCols(sys.m()).transpose() *
                       sys.grid().face_weights().cwiseProduct(stokes.v_star.values);
  std::vector<Equilibrium> found;
  double best_residual = std::numeric_limits<double>::infinity();
  for (const auto& b0 : starts) {
    const DescentResult r = descend(psi, sys.stiffness(), b0);
    best_residual = std::min(best_residual, r.residual);
    if (!r.converged) continue;
    bool dup = false;
    for (const auto& e : found) dup = dup || (e.beta - r.beta).norm() <= 1e-6 * (1.0 + r.beta.norm());
    if (dup) continue;
    Equilibrium e;
    e.v_star = stokes.v_star;
    e.p_star = stokes.p_star;
    e.beta = r.beta;
    e.u_bar.values = sys.plate_basis() * r.beta;
    e.alpha_star = alpha;
    e.residual = r.residual;
    e.energy = r.value;
    found.push_back(std::move(e));
  }
  if (found.empty()) {
    std::ostringstream os;
    os << "stationary descent stagnated: best residual " << best_residual << " above " << stat_tol;
    throw std::runtime_error(os.str());
  }
  std::sort(found.begin(), found.end(), [](const Equilibrium& a, const Equilibrium& b) { return a.energy < b.energy; });
  return found;
}

// Single start from beta_init (zero when absent).
inline Equilibrium minimize_stationary(const ForceModel& model, const StationaryStokes& stokes, const GalerkinSystem& sys,
                                       const Vector* beta_init = nullptr, const PlateFunction* plate_load = nullptr,
                                       bool check_coercivity = true) {
  MinimizeOptions opt;
  opt.starts = 1;
  opt.check_coercivity = check_coercivity;
  return minimize_stationary_all(model, stokes, sys, beta_init, plate_load, opt).front();
}

// The equilibrium as a Galerkin state (α*, ū, 0).
inline galerkin::State equilibrium_state(const Equilibrium& e, const GalerkinSystem& sys) {
  galerkin::State s = galerkin::zero_state(sys);
  s.alpha = e.alpha_star;
  s.beta = e.beta;
  return s;
}

// 𝓗-surrogate distance: sqrt((Y−Y*)ᵀM(Y−Y*) + (β−β̄)ᵀK(β−β̄))
inline double distance(const galerkin::State& s, const Equilibrium& e, const GalerkinSystem& sys) {
  galerkin::State d = s;
  d.alpha -= e.alpha_star;
  d.beta -= e.beta;
  d.offset = 0.0;
  return std::sqrt(std::max(0.0, 2.0 * dynamics::energy_E0(sys, galerkin::pack(d), 0.0)));
}

struct Convergence {
  std::vector<double> times, distances, ut_norms, estar;
  Equilibrium equilibrium;
  double final_distance = 0.0;
  double final_ut = 0.0;
  bool converged = false;
};

// Runs the dynamics with constant loads G0 (fluid) and G_pl (plate) and
// measures the distance to the stationary point seeded from the tail.
inline Convergence converge_to_equilibrium(const galerkin::State& s0, const ForceModel& model, const galerkin::Forcing& loads,
                                           double T, double dt, const GalerkinSystem& sys, int stride = 10) {
  if (loads.fluid_time || loads.plate_time) throw std::invalid_argument("equilibrium search needs time-independent loads");
  const dynamics::Integrator integ(sys, galerkin::project_forcing(sys, loads), model, dt);
  const dynamics::Trajectory tr = dynamics::simulate(s0, T, integ, {stride});
  const VelocityField g0 = loads.fluid.values.size() ? loads.fluid : VelocityField{Vector::Zero(sys.grid().num_faces())};
  const StationaryStokes stokes = solve_stationary_stokes(g0, *sys.basis().fluid, sys.nu());
  const PlateFunction* pl = loads.plate.values.size() ? &loads.plate : nullptr;
  const Vector seed = tr.samples.back().state.beta;
  Convergence c;
  c.equilibrium = minimize_stationary(model, stokes, sys, &seed, pl, false);
  for (const auto& s : tr.samples) {
    c.times.push_back(s.state.t);
    c.distances.push_back(distance(s.state, c.equilibrium, sys));
    c.ut_norms.push_back(std::sqrt(std::max(0.0, s.state.betadot.dot(sys.plate_gram() * s.state.betadot))));
    c.estar.push_back(s.energy.Estar);
  }
  c.final_distance = c.distances.back();
  c.final_ut = c.ut_norms.back();
  c.converged = c.final_distance < 1e-4 && c.final_ut < 1e-5;
  return c;
}

}  // namespace plateflow::steady
