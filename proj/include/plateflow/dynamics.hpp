#pragma once

#include "plateflow/galerkin.hpp"

#include <Eigen/LU>

#include <cmath>
#include <limits>
#include <optional>
#include <random>

namespace plateflow::dynamics {

using galerkin::GalerkinSystem;
using galerkin::ProjectedForcing;
using galerkin::State;
using forces::ForceModel;

inline constexpr double fixed_point_tol = 1e-12;
inline constexpr int fixed_point_max_iter = 50;

// Stationary fluid part of a constant load and the plate load it leaves
// behind: D_ψψ α* = f_ψ, c = f_φ + f_pl − D_φψ α*.
struct EnergyShift {
  Vector alpha_star;
  Vector plate_load;
};

inline EnergyShift energy_shift(const GalerkinSystem& sys, const ProjectedForcing& forcing) {
  const int m = sys.m(), n = sys.n();
  EnergyShift s{Vector::Zero(m), Vector::Zero(n)};
  const Vector b = galerkin::load_vector(sys, {forcing.fluid, forcing.plate, {}, {}}, 0.0);
  if (b.cwiseAbs().maxCoeff() == 0.0) return s;
  if (m > 0) s.alpha_star = sys.dissipation().topLeftCorner(m, m).ldlt().solve(b.head(m));
  s.plate_load = b.tail(n) - sys.dissipation().bottomLeftCorner(n, m) * s.alpha_star;
  return s;
}

struct EnergyReport {
  double E0 = 0.0;
  double E = 0.0;
  double Estar = 0.0;
  double dissipation_integral = 0.0;
  double work_integral = 0.0;
  double balance_residual = 0.0;
};

// ½YᵀMY + ½(Δu,Δu) with u = Ξβ + c w0
inline double energy_E0(const GalerkinSystem& sys, const Vector& x, double offset) {
  const int m = sys.m(), n = sys.n();
  Vector y(m + n);
  y << x.head(m), x.tail(n);
  const Vector beta = x.segment(m, n);
  return 0.5 * y.dot(sys.mass() * y) + 0.5 * beta.dot(sys.stiffness() * beta) + 0.5 * offset * offset * sys.offset_bending();
}

inline double plate_potential(const GalerkinSystem& sys, const ForceModel& model, const Vector& x, double offset) {
  if (model.is_none()) return 0.0;
  const Vector u = sys.plate_basis() * x.segment(sys.m(), sys.n()) + offset * sys.projector().complement();
  return forces::potential_value(model, u);
}

inline double energy_Estar(const GalerkinSystem& sys, const ForceModel& model, const EnergyShift& shift, const Vector& x,
                           double offset) {
  const int m = sys.m(), n = sys.n();
  Vector z(m + n);
  z << x.head(m) - shift.alpha_star, x.tail(n);
  const Vector beta = x.segment(m, n);
  return 0.5 * z.dot(sys.mass() * z) + 0.5 * beta.dot(sys.stiffness() * beta) + 0.5 * offset * offset * sys.offset_bending() +
         plate_potential(sys, model, x, offset) - shift.plate_load.dot(beta);
}

// Implicit midpoint on Ẋ = L X + N(X) + g(t), with the linear part
// factored once and the force iterated at the midpoint.
class Integrator {
 public:
  Integrator(const GalerkinSystem& sys, ProjectedForcing forcing, ForceModel model, double dt)
      : sys_(&sys), forcing_(std::move(forcing)), model_(std::move(model)), dt_(dt) {
    if (!(dt_ > 0.0)) throw std::invalid_argument("time step must be positive");
    galerkin::require_beam_model(sys, model_);
    linear_ = galerkin::linear_operator(sys);
    const int d = sys.dim();
    lhs_.compute(Matrix::Identity(d, d) - 0.5 * dt_ * linear_);
  }

  double dt() const { return dt_; }
  const GalerkinSystem& system() const { return *sys_; }
  const ForceModel& model() const { return model_; }
  const ProjectedForcing& forcing() const { return forcing_; }
  const Matrix& linear() const { return linear_; }

  // nonlinear plus forcing contribution to Ẋ
  Vector source(const Vector& x, double t, double offset) const {
    const int m = sys_->m(), n = sys_->n();
    Vector b = galerkin::load_vector(*sys_, forcing_, t);
    if (!model_.is_none()) {
      const Vector u = sys_->plate_basis() * x.segment(m, n) + offset * sys_->projector().complement();
      b.tail(n) -= galerkin::projected_force(*sys_, model_, u);
    }
    Vector out = Vector::Zero(sys_->dim());
    if (m + n == 0) return out;
    const Vector yd = sys_->solve_mass(b);
    out.head(m) = yd.head(m);
    out.tail(n) = yd.tail(n);
    return out;
  }

  // returns the midpoint state; x is advanced in place
  Vector advance(Vector& x, double t, double offset) const {
    const double tm = t + 0.5 * dt_;
    const bool linear = model_.is_none();
    Vector mid = lhs_.solve(x + 0.5 * dt_ * source(x, tm, offset));
    if (!linear) {
      double prev = std::numeric_limits<double>::infinity();
      bool converged = false;
      for (int it = 0; it < fixed_point_max_iter; ++it) {
        const Vector next = lhs_.solve(x + 0.5 * dt_ * source(mid, tm, offset));
        const double diff = (next - mid).norm();
        mid = next;
        if (!std::isfinite(diff) || !mid.allFinite()) break;
        if (diff <= fixed_point_tol * (1.0 + mid.norm())) {
          converged = true;
          break;
        }
        last_contraction_ = diff / prev;
        prev = diff;
      }
      if (!converged) {
        throw std::runtime_error("midpoint fixed-point iteration did not converge (contraction estimate " +
                                 std::to_string(last_contraction_) + "); reduce dt");
      }
    }
    x = 2.0 * mid - x;
    return mid;
  }

  State step(const State& s) const {
    Vector x = galerkin::pack(s);
    advance(x, s.t, s.offset);
    return galerkin::unpack(x, *sys_, s.t + dt_, s.offset);
  }

 private:
  const GalerkinSystem* sys_;
  ProjectedForcing forcing_;
  ForceModel model_;
  double dt_;
  Matrix linear_;
  Eigen::PartialPivLU<Matrix> lhs_;
  mutable double last_contraction_ = 0.0;
};

inline State step(const State& s, double dt, const GalerkinSystem& sys, const ProjectedForcing& forcing, const ForceModel& model) {
  return Integrator(sys, forcing, model, dt).step(s);
}

struct Sample {
  State state;
  EnergyReport energy;
  double mean_u = 0.0;
};

struct Trajectory {
  std::vector<Sample> samples;
  double dt = 0.0;
  int stride = 1;
  long steps = 0;
  std::string scheme = "implicit_midpoint";
  double max_mean_drift = 0.0;
};

struct SimulateOptions {
  int stride = 1;
};

inline Trajectory simulate(const State& s0, double T, const Integrator& integ, const SimulateOptions& opt = {}) {
  if (!(T >= 0.0)) throw std::invalid_argument("final time must be nonnegative");
  if (opt.stride < 1) throw std::invalid_argument("output stride must be at least 1");
  const GalerkinSystem& sys = integ.system();
  const ForceModel& model = integ.model();
  const double dt = integ.dt();
  const long steps = std::lround(T / dt);
  if (std::abs(steps * dt - T) > 1e-9 * std::max(1.0, T)) throw std::invalid_argument("final time is not a multiple of dt");
  const EnergyShift shift = energy_shift(sys, integ.forcing());
  const int m = sys.m(), n = sys.n();

  Trajectory tr;
  tr.dt = dt;
  tr.stride = opt.stride;
  tr.steps = steps;
  Vector x = galerkin::pack(s0);
  const double offset = s0.offset;
  auto energies = [&](const Vector& xs) {
    EnergyReport e;
    e.E0 = energy_E0(sys, xs, offset);
    e.E = e.E0 + plate_potential(sys, model, xs, offset);
    e.Estar = energy_Estar(sys, model, shift, xs, offset);
    return e;
  };
  auto mean_u = [&](const Vector& xs) {
    return sys.plate().mean(sys.plate_basis() * xs.segment(m, n) + offset * sys.projector().complement());
  };
  const EnergyReport e0 = energies(x);
  const double mean0 = mean_u(x);
  tr.samples.push_back({galerkin::unpack(x, sys, s0.t, offset), e0, mean0});
  double diss = 0.0, work = 0.0, t = s0.t;
  Vector y(m + n);
  for (long k = 1; k <= steps; ++k) {
    const Vector mid = integ.advance(x, t, offset);
    y << mid.head(m), mid.tail(n);
    diss += dt * y.dot(sys.dissipation() * y);
    work += dt * galerkin::load_vector(sys, integ.forcing(), t + 0.5 * dt).dot(y);
    t = s0.t + k * dt;
    if (k % opt.stride == 0 || k == steps) {
      EnergyReport e = energies(x);
      e.dissipation_integral = diss;
      e.work_integral = work;
      e.balance_residual = (e.E + diss - e0.E - work) / (std::abs(e0.E) + 1.0);
      const double mu = mean_u(x);
      tr.max_mean_drift = std::max(tr.max_mean_drift, std::abs(mu - mean0));
      tr.samples.push_back({galerkin::unpack(x, sys, t, offset), e, mu});
    }
  }
  return tr;
}

inline Trajectory simulate(const galerkin::InitialData& u0, double T, double dt, const GalerkinSystem& sys,
                           const galerkin::Forcing& forcing, const ForceModel& model, int stride = 1) {
  const Integrator integ(sys, galerkin::project_forcing(sys, forcing), model, dt);
  return simulate(galerkin::project_initial(u0, sys), T, integ, {stride});
}

inline double energy_balance_residual(const Trajectory& tr) {
  double r = 0.0;
  for (const auto& s : tr.samples) r = std::max(r, std::abs(s.energy.balance_residual));
  return r;
}

// Quadratic forms on X = (α, β, β̇): E0 = ½XᵀQX, and the Lyapunov cross
// term (u,u_t) + (v, N0 u) = XᵀSX.
inline Matrix energy_matrix(const GalerkinSystem& sys) {
  const int m = sys.m(), n = sys.n(), d = sys.dim();
  std::vector<int> y_index;
  for (int i = 0; i < m; ++i) y_index.push_back(i);
  for (int j = 0; j < n; ++j) y_index.push_back(m + n + j);
  Matrix q = Matrix::Zero(d, d);
  for (int a = 0; a < m + n; ++a) {
    for (int b = 0; b < m + n; ++b) q(y_index[a], y_index[b]) = sys.mass()(a, b);
  }
  q.block(m, m, n, n) = sys.stiffness();
  return q;
}

inline Matrix lyapunov_cross_matrix(const GalerkinSystem& sys) {
  const int m = sys.m(), n = sys.n(), d = sys.dim();
  Matrix p = Matrix::Zero(d, d);
  p.block(m, m + n, n, n) = sys.plate_gram();
  const Matrix& f = sys.fluid_gram();
  p.block(0, m, m, n) = f.block(0, m, m, n);
  p.block(m + n, m, n, n) = f.block(m, m, n, n);
  return 0.5 * (p + p.transpose());
}

inline double lyapunov_V(const State& s, double eps, const GalerkinSystem& sys) {
  if (!(eps >= 0.0)) throw std::invalid_argument("eps must be nonnegative");
  const Vector x = galerkin::pack(s);
  const double e0 = energy_E0(sys, x, s.offset);
  if (eps == 0.0) return e0;
  return e0 + eps * x.dot(lyapunov_cross_matrix(sys) * x);
}

// α ~ N(0,1), β ~ N(0,1)/√κ, β̇ ~ N(0,1)
inline State random_state(const GalerkinSystem& sys, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> nd;
  State s = galerkin::zero_state(sys);
  for (auto& a : s.alpha) a = scale * nd(rng);
  for (int j = 0; j < sys.n(); ++j) {
    s.beta[j] = scale * nd(rng) / std::sqrt(sys.basis().plate_modes[j].kappa);
    s.betadot[j] = scale * nd(rng);
  }
  return s;
}

struct LyapunovScan {
  double eps = 0.0;
  double a0 = 0.0;
  double a1 = 0.0;
  double max_rate_eig = 0.0;  // largest eigenvalue of the dV/dt form, relative to Q
  bool found = false;
};

// Largest ε in {2^-1, ..., 2^-10} with 0.5 E0 ≤ V ≤ 1.5 E0 on the sampled
// states and dV/dt negative definite for the linear unforced flow.
inline LyapunovScan lyapunov_scan(const GalerkinSystem& sys, int states, std::uint64_t seed) {
  const Matrix q = energy_matrix(sys);
  const Matrix s = lyapunov_cross_matrix(sys);
  const Matrix l = galerkin::linear_operator(sys);
  const Matrix base = 0.5 * (q * l + l.transpose() * q);
  const Matrix cross = s * l + l.transpose() * s;
  std::mt19937_64 rng(seed);
  std::vector<Vector> xs;
  for (int k = 0; k < states; ++k) xs.push_back(galerkin::pack(random_state(sys, rng)));
  // normalize the rate form by the energy so the sign test is scale free
  Eigen::LLT<Matrix> qf(q);
  const Matrix lq = qf.matrixL();
  LyapunovScan out;
  for (int k = 1; k <= 10; ++k) {
    const double eps = std::ldexp(1.0, -k);
    double a0 = std::numeric_limits<double>::infinity(), a1 = 0.0;
    for (const auto& x : xs) {
      const double e = 0.5 * x.dot(q * x);
      const double v = e + eps * x.dot(s * x);
      a0 = std::min(a0, v / e);
      a1 = std::max(a1, v / e);
    }
    const Matrix h = base + eps * cross;
    const Matrix hn = lq.triangularView<Eigen::Lower>().solve(lq.triangularView<Eigen::Lower>().solve(h).transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (hn + hn.transpose()), Eigen::EigenvaluesOnly);
    const double top = es.eigenvalues().maxCoeff();
    if (a0 >= 0.5 && a1 <= 1.5 && top < 0.0) {
      out = {eps, a0, a1, top, true};
      return out;
    }
  }
  return out;
}

struct DecayFit {
  bool ok = false;
  double gamma = 0.0;
  double residual = 0.0;
};

// −slope of log(q) against t over the second half of the samples
inline DecayFit fit_decay_rate(const std::vector<double>& t, const std::vector<double>& q) {
  DecayFit f;
  if (t.size() != q.size() || t.size() < 4) return f;
  const std::size_t start = t.size() / 2;
  const std::size_t n = t.size() - start;
  double st = 0, sy = 0, stt = 0, sty = 0;
  for (std::size_t k = start; k < t.size(); ++k) {
    if (!(q[k] > 0.0)) return f;
    const double y = std::log(q[k]);
    st += t[k];
    sy += y;
    stt += t[k] * t[k];
    sty += t[k] * y;
  }
  const double denom = n * stt - st * st;
  if (denom == 0.0) return f;
  const double slope = (n * sty - st * sy) / denom;
  const double icpt = (sy - slope * st) / n;
  double rss = 0.0;
  for (std::size_t k = start; k < t.size(); ++k) {
    const double r = std::log(q[k]) - (icpt + slope * t[k]);
    rss += r * r;
  }
  f.ok = true;
  f.gamma = -slope;
  f.residual = std::sqrt(rss / n);
  return f;
}

// 𝓗-norm: sqrt(2 E0)
inline std::vector<double> energy_norm_series(const Trajectory& tr, std::vector<double>* times = nullptr) {
  std::vector<double> out;
  for (const auto& s : tr.samples) {
    out.push_back(std::sqrt(2.0 * std::max(s.energy.E0, 0.0)));
    if (times) times->push_back(s.state.t);
  }
  return out;
}

inline DecayFit fit_decay_rate(const Trajectory& tr) {
  std::vector<double> t;
  const std::vector<double> q = energy_norm_series(tr, &t);
  return fit_decay_rate(t, q);
}

// ‖X‖²_𝓗 = XᵀQX
inline double energy_norm_sq(const Matrix& q, const Vector& x) { return x.dot(q * x); }

struct DependenceReport {
  double sup_delta = 0.0;
  double sup_half = 0.0;
  double factor = 0.0;  // sup_delta / sup_half
};

inline DependenceReport continuous_dependence_probe(const State& s0, const State& direction, double delta, double T,
                                                    const Integrator& integ, int stride = 10) {
  if (!(delta >= 0.0)) throw std::invalid_argument("delta must be nonnegative");
  const GalerkinSystem& sys = integ.system();
  const Matrix q = energy_matrix(sys);
  const Trajectory base = simulate(s0, T, integ, {stride});
  auto sup_diff = [&](double d) {
    State p = s0;
    p.alpha += d * direction.alpha;
    p.beta += d * direction.beta;
    p.betadot += d * direction.betadot;
    const Trajectory tr = simulate(p, T, integ, {stride});
    double sup = 0.0;
    for (std::size_t k = 0; k < tr.samples.size(); ++k) {
      const Vector z = galerkin::pack(tr.samples[k].state) - galerkin::pack(base.samples[k].state);
      sup = std::max(sup, std::sqrt(energy_norm_sq(q, z)));
    }
    return sup;
  };
  DependenceReport r;
  r.sup_delta = sup_diff(delta);
  r.sup_half = sup_diff(0.5 * delta);
  r.factor = r.sup_half > 0.0 ? r.sup_delta / r.sup_half : 0.0;
  return r;
}

struct QuasiStabilityReport {
  bool pass = false;
  double fitted_M = 0.0;
};

// Smallest M with ‖Z(t)‖² ≤ M (e^{-γt}‖Z0‖² + ∫ e^{-γ(t-τ)} ‖u_a − u_b‖² dτ)
// on every sample of the pair of trajectories.
inline QuasiStabilityReport quasi_stability_probe(const Trajectory& a, const Trajectory& b, const GalerkinSystem& sys,
                                                  double gamma_star, double m_cap) {
  if (a.samples.size() != b.samples.size()) throw std::invalid_argument("trajectories are sampled differently");
  const Matrix q = energy_matrix(sys);
  const int m = sys.m(), n = sys.n();
  QuasiStabilityReport r;
  auto z_of = [&](std::size_t k) {
    return Vector(galerkin::pack(a.samples[k].state) - galerkin::pack(b.samples[k].state));
  };
  auto plate_sq = [&](const Vector& z) {
    const Vector db = z.segment(m, n);
    return db.dot(sys.plate_gram() * db);
  };
  const Vector z0 = z_of(0);
  const double z0sq = energy_norm_sq(q, z0);
  const double t0 = a.samples[0].state.t;
  double integral = 0.0, prev_plate = plate_sq(z0);
  for (std::size_t k = 0; k < a.samples.size(); ++k) {
    const Vector z = z_of(k);
    const double t = a.samples[k].state.t - t0;
    const double cur_plate = plate_sq(z);
    if (k > 0) {
      const double h = a.samples[k].state.t - a.samples[k - 1].state.t;
      const double decay = std::exp(-gamma_star * h);
      integral = decay * integral + 0.5 * h * (decay * prev_plate + cur_plate);
    }
    prev_plate = cur_plate;
    const double lhs = energy_norm_sq(q, z);
    const double rhs = std::exp(-gamma_star * t) * z0sq + integral;
    if (lhs > 0.0) r.fitted_M = std::max(r.fitted_M, rhs > 0.0 ? lhs / rhs : std::numeric_limits<double>::infinity());
  }
  r.pass = std::isfinite(r.fitted_M) && r.fitted_M <= m_cap;
  return r;
}

struct RegularityReport {
  double sup_vt = 0.0;      // ‖v_t‖
  double sup_delta_ut = 0.0;  // ‖Δu_t‖
  double sup_utt = 0.0;     // ‖u_tt‖
  bool finite = false;
  bool non_growing = false;
};

// Centered differences over the samples in [T/2, T]. Non-growing: the sup
// over the last quarter of the tail does not exceed the sup over its first
// quarter.
inline RegularityReport attractor_regularity_probe(const Trajectory& tr, const GalerkinSystem& sys, double min_T = 50.0) {
  if (tr.samples.size() < 9) throw std::invalid_argument("trajectory too short");
  const double t0 = tr.samples.front().state.t, t1 = tr.samples.back().state.t;
  if (t1 - t0 < min_T) throw std::invalid_argument("trajectory too short for the regularity probe");
  const int m = sys.m(), n = sys.n();
  const Matrix& fg = sys.fluid_gram();
  struct Point {
    double t, vt, dut, utt;
  };
  std::vector<Point> pts;
  const double half = 0.5 * (t0 + t1);
  for (std::size_t k = 1; k + 1 < tr.samples.size(); ++k) {
    const State& s = tr.samples[k].state;
    if (s.t < half) continue;
    const State& sp = tr.samples[k + 1].state;
    const State& sm = tr.samples[k - 1].state;
    const double h = sp.t - sm.t;
    Vector yd(m + n);
    yd << (sp.alpha - sm.alpha) / h, (sp.betadot - sm.betadot) / h;
    const Vector bdd = (sp.betadot - sm.betadot) / h;
    pts.push_back({s.t, std::sqrt(std::max(0.0, yd.dot(fg * yd))), std::sqrt(std::max(0.0, s.betadot.dot(sys.stiffness() * s.betadot))),
                   std::sqrt(std::max(0.0, bdd.dot(sys.plate_gram() * bdd)))});
  }
  RegularityReport r;
  if (pts.size() < 4) throw std::invalid_argument("trajectory too short");
  const std::size_t qn = pts.size() / 4;
  double first[3] = {0, 0, 0}, last[3] = {0, 0, 0};
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const double v[3] = {pts[k].vt, pts[k].dut, pts[k].utt};
    r.sup_vt = std::max(r.sup_vt, v[0]);
    r.sup_delta_ut = std::max(r.sup_delta_ut, v[1]);
    r.sup_utt = std::max(r.sup_utt, v[2]);
    for (int c = 0; c < 3; ++c) {
      if (k < qn) first[c] = std::max(first[c], v[c]);
      if (k >= pts.size() - qn) last[c] = std::max(last[c], v[c]);
    }
  }
  r.finite = std::isfinite(r.sup_vt) && std::isfinite(r.sup_delta_ut) && std::isfinite(r.sup_utt);
  r.non_growing = true;
  for (int c = 0; c < 3; ++c) r.non_growing = r.non_growing && last[c] <= first[c] * (1.0 + 1e-6) + 1e-12;
  return r;
}

}  // namespace plateflow::dynamics
