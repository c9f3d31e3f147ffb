#pragma once

#include "plateflow/config.hpp"
#include "plateflow/generator_spectrum.hpp"
#include "plateflow/io.hpp"
#include "plateflow/steady_state.hpp"

#include <chrono>
#include <functional>
#include <numbers>

namespace plateflow::experiments {

using config::ExperimentConfig;
using forces::ForceModel;
using galerkin::GalerkinSystem;
using galerkin::State;
using io::json;

// smooth body force with a nonzero curl
inline mesh::VelocityField body_force(const mesh::Grid& g, double amp) {
  if (amp == 0.0) return {};
  const double lx = g.nx() * g.hx(), lz = g.nz() * g.hz();
  return mesh::sample_velocity(
      g, [=](double x, double z) { return amp * std::sin(3.0 * x / lx) * z / lz; },
      [=](double x, double z) { return amp * std::cos(2.0 * z / lz) * (x / lx) * (x / lx); });
}

// zero-mean plate load; a constant load would not reach the zero-mean modes
inline mesh::PlateFunction plate_pattern(const mesh::PlateGrid& p, double amp) {
  if (amp == 0.0) return {};
  const double l = p.length();
  return {p.sample([=](double x) { return amp * std::cos(std::numbers::pi * x / l); })};
}

inline galerkin::Forcing make_forcing(const GalerkinSystem& sys, double fluid_amp, double plate_amp, double frequency = 0.0) {
  galerkin::Forcing f;
  f.fluid = body_force(sys.grid(), fluid_amp);
  f.plate = plate_pattern(sys.plate(), plate_amp);
  if (frequency > 0.0) {
    auto mod = [frequency](double t) { return std::cos(frequency * t); };
    if (fluid_amp != 0.0) f.fluid_time = mod;
    if (plate_amp != 0.0) f.plate_time = mod;
  }
  return f;
}

inline ForceModel make_model(const config::Physics& p, const modal::ModalBasis& basis, double lx) {
  if (p.force == "none") return ForceModel::none();
  if (p.force == "kirchhoff") {
    forces::Kirchhoff k;
    k.kappa = p.kirchhoff_kappa;
    k.q = p.kirchhoff_q;
    k.r = p.kirchhoff_r;
    k.mu = p.kirchhoff_mu;
    k.f = forces::Polynomial{p.kirchhoff_poly};
    return ForceModel::kirchhoff(k, basis.plate);
  }
  if (p.force == "berger") return ForceModel::berger({p.berger_kappa, p.berger_gamma, {}}, basis.plate);
  auto g2 = std::make_shared<const mesh::PlateGrid2D>(p.vk_nodes, lx);
  forces::VonKarman vk;
  if (p.vk_prestress != 0.0) {
    const double c = p.vk_prestress;
    vk.f0 = g2->sample([c](double x, double y) { return 0.5 * c * (x * x + y * y); });
  }
  return ForceModel::von_karman(vk, g2);
}

inline modal::ModalBasis truncate(const modal::ModalBasis& b, int m, int n) {
  if (m > static_cast<int>(b.stokes.size()) || n > static_cast<int>(b.plate_modes.size())) {
    throw std::invalid_argument("cannot truncate a basis to more modes than it has");
  }
  modal::ModalBasis t;
  t.fluid = b.fluid;
  t.plate = b.plate;
  t.stokes.assign(b.stokes.begin(), b.stokes.begin() + m);
  t.plate_modes.assign(b.plate_modes.begin(), b.plate_modes.begin() + n);
  t.lifted.assign(b.lifted.begin(), b.lifted.begin() + n);
  return t;
}

struct Context {
  ExperimentConfig cfg;
  mesh::Grid grid;
  std::optional<std::filesystem::path> cache_dir;
  std::shared_ptr<const modal::ModalBasis> basis;
  std::shared_ptr<const GalerkinSystem> sys;
  bool cache_hit = false;

  // shared between criteria
  double max_mean_drift = 0.0;
  double linear_rate = std::numeric_limits<double>::quiet_NaN();
  std::vector<dynamics::Trajectory> attracted;

  Context(ExperimentConfig c, std::optional<std::filesystem::path> cache)
      : cfg(std::move(c)), grid(cfg.geometry), cache_dir(std::move(cache)) {
    basis = std::make_shared<const modal::ModalBasis>(load_basis(cfg.m, cfg.n));
    sys = std::make_shared<const GalerkinSystem>(basis, cfg.physics.nu);
  }

  modal::ModalBasis load_basis(int m, int n) {
    if (cache_dir) return io::cache::load_or_compute(*cache_dir, grid, m, n, &cache_hit);
    return modal::compute_modal_basis(grid, m, n);
  }

  // a basis with (m, n) modes, reusing the main one when it is large enough
  std::shared_ptr<const modal::ModalBasis> basis_for(int m, int n) {
    if (m <= static_cast<int>(basis->stokes.size()) && n <= static_cast<int>(basis->plate_modes.size())) {
      return std::make_shared<const modal::ModalBasis>(truncate(*basis, m, n));
    }
    return std::make_shared<const modal::ModalBasis>(load_basis(m, n));
  }

  ForceModel model() const { return make_model(cfg.physics, *basis, cfg.geometry.lx); }
  galerkin::Forcing forcing() const {
    return make_forcing(*sys, cfg.physics.fluid_load, cfg.physics.plate_load, cfg.physics.load_frequency);
  }
  ForceModel probe_berger() const { return ForceModel::berger({cfg.probes.berger_kappa, cfg.probes.berger_gamma, {}}, basis->plate); }
  galerkin::Forcing probe_loads() const { return make_forcing(*sys, cfg.probes.fluid_load, cfg.probes.plate_load); }

  dynamics::Trajectory track(dynamics::Trajectory tr) {
    max_mean_drift = std::max(max_mean_drift, tr.max_mean_drift);
    return tr;
  }
};

inline double energy_norm(const GalerkinSystem& sys, const State& s) {
  return std::sqrt(2.0 * dynamics::energy_E0(sys, galerkin::pack(s), s.offset));
}

// random state rescaled to 𝓗-norm R·u with u uniform in (0, 1]
inline State ball_state(const GalerkinSystem& sys, std::mt19937_64& rng, double radius) {
  State s = dynamics::random_state(sys, rng);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  const double scale = radius * (1.0 - ud(rng)) / energy_norm(sys, s);
  s.alpha *= scale;
  s.beta *= scale;
  s.betadot *= scale;
  return s;
}

struct Criterion {
  int id = 0;
  std::string name;
  bool pass = false;
  json metrics = json::object();
  std::string detail;
  double seconds = 0.0;
};

inline std::string line(const Criterion& c) {
  std::ostringstream os;
  os << (c.pass ? "PASS" : "FAIL") << "  C" << c.id << " " << c.name;
  if (!c.detail.empty()) os << "  (" << c.detail << ")";
  return os.str();
}

inline json to_json(const Criterion& c) {
  json j;
  j["id"] = c.id;
  j["name"] = c.name;
  j["pass"] = c.pass;
  j["metrics"] = c.metrics;
  j["detail"] = c.detail;
  return j;
}

namespace checks {

inline constexpr double balance_dt = 1e-3;
inline constexpr double balance_T = 1.0;
inline constexpr double order_low = 3.4;
inline constexpr double order_high = 4.6;

inline Criterion mass_positivity(Context& ctx) {
  Criterion c{1, "mass_matrix_positivity"};
  std::vector<std::pair<int, int>> sizes{{1, 1}, {4, 4}, {12, 8}};
  if (std::find(sizes.begin(), sizes.end(), std::make_pair(ctx.cfg.m, ctx.cfg.n)) == sizes.end()) sizes.emplace_back(ctx.cfg.m, ctx.cfg.n);
  c.pass = true;
  json cases = json::array();
  for (auto [m, n] : sizes) {
    const GalerkinSystem sys(ctx.basis_for(m, n), ctx.cfg.physics.nu);
    const double asym = (sys.mass() - sys.mass().transpose()).cwiseAbs().maxCoeff();
    const double lmin = sys.mass_min_eigenvalue();
    const bool ok = asym <= 1e-12 && lmin > 0.0;
    c.pass = c.pass && ok;
    cases.push_back({{"m", m}, {"n", n}, {"asymmetry", asym}, {"min_eigenvalue", lmin}, {"pass", ok}});
  }
  c.metrics["cases"] = cases;
  c.detail = std::to_string(sizes.size()) + " mode counts checked";
  return c;
}

inline Criterion energy_balance(Context& ctx) {
  Criterion c{2, "energy_balance"};
  const GalerkinSystem& sys = *ctx.sys;
  std::mt19937_64 rng(ctx.cfg.probes.seed + 2);
  const State s0 = dynamics::random_state(sys, rng);
  const dynamics::Integrator lin(sys, {}, ForceModel::none(), balance_dt);
  const double r_lin = dynamics::energy_balance_residual(ctx.track(dynamics::simulate(s0, balance_T, lin, {10})));
  const auto pf = galerkin::project_forcing(sys, ctx.probe_loads());
  const auto berger = ctx.probe_berger();
  const double r1 = dynamics::energy_balance_residual(
      ctx.track(dynamics::simulate(s0, balance_T, dynamics::Integrator(sys, pf, berger, balance_dt), {10})));
  const double r2 = dynamics::energy_balance_residual(
      ctx.track(dynamics::simulate(s0, balance_T, dynamics::Integrator(sys, pf, berger, 2 * balance_dt), {5})));
  const double ratio = r2 / r1;
  c.pass = r_lin <= 1e-5 && r1 <= 1e-5 && ratio >= order_low && ratio <= order_high;
  c.metrics = {{"dt", balance_dt}, {"linear_residual", r_lin}, {"berger_residual", r1}, {"berger_residual_2dt", r2}, {"ratio", ratio}};
  c.detail = "berger residual " + io::num(r1) + ", halving ratio " + io::num(ratio);
  return c;
}

inline Criterion exponential_stability(Context& ctx) {
  Criterion c{3, "exponential_stability"};
  const GalerkinSystem& sys = *ctx.sys;
  const double abscissa = spectrum::spectral_abscissa(spectrum::assemble_generator(sys));
  const dynamics::Integrator lin(sys, {}, ForceModel::none(), ctx.cfg.integration.dt);
  std::mt19937_64 rng(ctx.cfg.probes.seed + 3);
  bool monotone = true, positive = true, agree = true;
  double worst_increase = 0.0, worst_rel = 0.0, sum = 0.0;
  json rates = json::array();
  for (int k = 0; k < ctx.cfg.probes.ensemble; ++k) {
    const auto& tr = ctx.track(dynamics::simulate(dynamics::random_state(sys, rng), ctx.cfg.probes.decay_T, lin, {1}));
    for (std::size_t i = 1; i < tr.samples.size(); ++i) {
      const double inc = tr.samples[i].energy.E0 - tr.samples[i - 1].energy.E0;
      worst_increase = std::max(worst_increase, inc);
      if (inc > 1e-12) monotone = false;
    }
    const dynamics::DecayFit fit = dynamics::fit_decay_rate(tr);
    positive = positive && fit.ok && fit.gamma > 0.0;
    const double rel = std::abs(fit.gamma - std::abs(abscissa)) / std::abs(abscissa);
    worst_rel = std::max(worst_rel, rel);
    agree = agree && rel <= 0.1;
    sum += fit.gamma;
    rates.push_back(fit.gamma);
  }
  ctx.linear_rate = sum / ctx.cfg.probes.ensemble;
  c.pass = monotone && positive && agree && abscissa < 0.0;
  c.metrics = {{"spectral_abscissa", abscissa}, {"fitted_rates", rates}, {"mean_rate", ctx.linear_rate},
               {"worst_relative_mismatch", worst_rel}, {"worst_energy_increase", worst_increase}};
  c.detail = "abscissa " + io::num(abscissa) + ", worst rate mismatch " + io::num(worst_rel);
  return c;
}

inline Criterion lyapunov(Context& ctx) {
  Criterion c{4, "lyapunov_construction"};
  const GalerkinSystem& sys = *ctx.sys;
  const dynamics::LyapunovScan scan = dynamics::lyapunov_scan(sys, ctx.cfg.probes.lyapunov_states, ctx.cfg.probes.seed + 4);
  bool monotone = scan.found;
  double worst = 0.0;
  if (scan.found) {
    const dynamics::Integrator lin(sys, {}, ForceModel::none(), ctx.cfg.integration.dt);
    std::mt19937_64 rng(ctx.cfg.probes.seed + 40);
    for (int k = 0; k < ctx.cfg.probes.ensemble; ++k) {
      const auto& tr = ctx.track(dynamics::simulate(dynamics::random_state(sys, rng), ctx.cfg.probes.lyapunov_T, lin, {1}));
      double prev = dynamics::lyapunov_V(tr.samples[0].state, scan.eps, sys);
      for (const auto& s : tr.samples) {
        const double v = dynamics::lyapunov_V(s.state, scan.eps, sys);
        worst = std::max(worst, (v - prev) / prev);
        if (v > prev * (1.0 + 1e-12)) monotone = false;
        prev = v;
      }
    }
  }
  c.pass = scan.found && scan.a0 >= 0.5 && scan.a1 <= 1.5 && monotone;
  c.metrics = {{"eps", scan.eps}, {"a0", scan.a0}, {"a1", scan.a1}, {"rate_form_top_eigenvalue", scan.max_rate_eig},
               {"worst_relative_increase", worst}};
  c.detail = scan.found ? "eps " + io::num(scan.eps) + ", a0 " + io::num(scan.a0) + ", a1 " + io::num(scan.a1) : "no eps found";
  return c;
}

inline Criterion force_contracts(Context& ctx) {
  Criterion c{6, "force_model_contracts"};
  const auto& plate = ctx.basis->plate;
  const double l = plate->length();
  const Vector u1 = plate->sample([l](double x) { return 16.0 * std::pow(x * (l - x) / (l * l), 2) * (1.0 + x / l); });
  auto g2 = std::make_shared<const mesh::PlateGrid2D>(ctx.cfg.physics.vk_nodes, 1.0);
  const Vector u2 = g2->sample([](double x, double y) {
    const double pi = std::numbers::pi;
    return 1.3 * std::pow(std::sin(pi * x), 2) * std::pow(std::sin(2 * pi * y), 2);
  });
  forces::VonKarman vk;
  vk.f0 = g2->sample([](double x, double y) { return 0.5 * (x * x - y * y); });
  const std::vector<std::pair<std::string, ForceModel>> models{
      {"kirchhoff", ForceModel::kirchhoff({}, plate)},
      {"berger", ctx.probe_berger()},
      {"von_karman", ForceModel::von_karman(vk, g2)}};
  bool ok = true;
  json per = json::object();
  for (const auto& [name, model] : models) {
    const Vector& u = model.dimension() == 2 ? u2 : u1;
    const double grad = forces::verify_gradient(model, u, 1e-5, ctx.cfg.probes.seed + 6);
    const forces::CoercivityReport coer = forces::verify_coercivity(model, 10, ctx.cfg.probes.seed + 60);
    const bool pass = grad <= 1e-4 && coer.pass;
    ok = ok && pass;
    per[name] = {{"gradient_error", grad}, {"coercivity_worst", coer.worst}, {"coercivity_pass", coer.pass}};
  }
  const forces::AiryResult airy = forces::airy_stress(mesh::PlateFunction2D{u2}, models[2].second);
  const mesh::PlateGrid2D g8(8, 1.0);
  const Vector a = forces::bracket(g8, g8.sample([](double x, double) { return x * x; }), g8.sample([](double, double y) { return y * y; }));
  const Vector xy = g8.sample([](double x, double y) { return x * y; });
  const Vector b = forces::bracket(g8, xy, xy);
  double poly = 0.0;
  for (int j = 1; j < 8; ++j) {
    for (int i = 1; i < 8; ++i) {
      poly = std::max(poly, std::abs(a[g8.node(i, j)] - 4.0));
      poly = std::max(poly, std::abs(b[g8.node(i, j)] + 2.0));
    }
  }
  std::mt19937_64 rng(ctx.cfg.probes.seed + 61);
  std::normal_distribution<double> nd;
  Vector r1(g8.num_nodes()), r2(g8.num_nodes());
  for (auto& s : r1) s = nd(rng);
  for (auto& s : r2) s = nd(rng);
  const double swap = (forces::bracket(g8, r1, r2) - forces::bracket(g8, r2, r1)).cwiseAbs().maxCoeff();
  c.pass = ok && airy.relative_residual <= 1e-8 && poly <= 1e-10 && swap == 0.0;
  c.metrics = {{"models", per}, {"airy_relative_residual", airy.relative_residual}, {"bracket_polynomial_error", poly},
               {"bracket_swap_error", swap}, {"coercivity_eta", forces::coercivity_eta}};
  c.detail = "airy residual " + io::num(airy.relative_residual);
  return c;
}

inline Criterion gradient_structure(Context& ctx) {
  Criterion c{7, "gradient_structure_equilibria"};
  const GalerkinSystem& sys = *ctx.sys;
  const galerkin::Forcing loads = ctx.probe_loads();
  const ForceModel berger = ctx.probe_berger();
  const dynamics::Integrator integ(sys, galerkin::project_forcing(sys, loads), berger, ctx.cfg.integration.dt);

  const mesh::VelocityField g0 = loads.fluid.values.size() ? loads.fluid : mesh::VelocityField{Vector::Zero(sys.grid().num_faces())};
  const steady::StationaryStokes stokes = steady::solve_stationary_stokes(g0, *sys.basis().fluid, sys.nu());
  const mesh::PlateFunction adj = modal::adjoint_N0(g0, *sys.basis().fluid);
  double identity = (stokes.p_star.values - adj.values).norm() / (1.0 + adj.values.norm());
  for (int j = 0; j < sys.n(); ++j) {
    const double lhs = sys.plate().inner(stokes.p_star.values, sys.basis().plate_modes[j].xi.values);
    const double rhs = mesh::inner_product(g0, sys.basis().lifted[j].phi, sys.grid());
    identity = std::max(identity, std::abs(lhs - rhs) / (1.0 + std::abs(rhs)));
  }
  steady::MinimizeOptions opt;
  opt.starts = ctx.cfg.probes.starts;
  opt.seed = ctx.cfg.probes.seed + 7;
  const mesh::PlateFunction* pl = loads.plate.values.size() ? &loads.plate : nullptr;
  const auto equilibria = steady::minimize_stationary_all(berger, stokes, sys, nullptr, pl, opt);
  double worst_residual = 0.0;
  for (const auto& e : equilibria) worst_residual = std::max(worst_residual, e.residual);

  std::mt19937_64 rng(ctx.cfg.probes.seed + 70);
  bool estar_ok = true;
  double worst_rise = 0.0, worst_distance = 0.0;
  ctx.attracted.clear();
  for (int k = 0; k < 2; ++k) {
    const auto& tr = ctx.track(dynamics::simulate(dynamics::random_state(sys, rng), ctx.cfg.probes.attract_T, integ, {10}));
    for (std::size_t i = 1; i < tr.samples.size(); ++i) {
      const double a = tr.samples[i - 1].energy.Estar, b = tr.samples[i].energy.Estar;
      const double rise = (b - a) / (std::abs(a) + 1.0);
      worst_rise = std::max(worst_rise, rise);
      if (rise > 1e-10) estar_ok = false;
    }
    double dist = std::numeric_limits<double>::infinity();
    for (const auto& e : equilibria) dist = std::min(dist, steady::distance(tr.samples.back().state, e, sys));
    worst_distance = std::max(worst_distance, dist);
    ctx.attracted.push_back(tr);
  }
  c.pass = estar_ok && worst_distance <= 1e-4 && worst_residual <= steady::stat_tol && identity <= 1e-8;
  c.metrics = {{"equilibria", static_cast<int>(equilibria.size())}, {"worst_stationary_residual", worst_residual},
               {"worst_tail_distance", worst_distance}, {"worst_relative_estar_rise", worst_rise},
               {"pressure_identity_error", identity}};
  c.detail = std::to_string(equilibria.size()) + " equilibria, tail distance " + io::num(worst_distance);
  return c;
}

inline Criterion quasi_stability(Context& ctx) {
  Criterion c{8, "quasi_stability"};
  const GalerkinSystem& sys = *ctx.sys;
  if (!(ctx.linear_rate > 0.0)) {
    c.detail = "no measured linear rate";
    return c;
  }
  const double gamma_star = 0.5 * ctx.linear_rate;
  const double cap = ctx.cfg.probes.m_cap;
  const double dt = ctx.cfg.integration.dt;
  const dynamics::Integrator berger(sys, galerkin::project_forcing(sys, ctx.probe_loads()), ctx.probe_berger(), dt);
  const dynamics::Integrator lin(sys, {}, ForceModel::none(), dt);
  std::mt19937_64 rng(ctx.cfg.probes.seed + 8);
  bool ok = true;
  double worst_berger = 0.0, worst_linear = 0.0;
  for (int k = 0; k < ctx.cfg.probes.pairs; ++k) {
    const State a = ball_state(sys, rng, ctx.cfg.probes.radius), b = ball_state(sys, rng, ctx.cfg.probes.radius);
    const auto rb = dynamics::quasi_stability_probe(ctx.track(dynamics::simulate(a, ctx.cfg.probes.qs_T, berger, {10})),
                                                    ctx.track(dynamics::simulate(b, ctx.cfg.probes.qs_T, berger, {10})), sys, gamma_star, cap);
    const auto rl = dynamics::quasi_stability_probe(ctx.track(dynamics::simulate(a, ctx.cfg.probes.qs_T, lin, {10})),
                                                    ctx.track(dynamics::simulate(b, ctx.cfg.probes.qs_T, lin, {10})), sys, gamma_star, cap);
    ok = ok && rb.pass && rl.pass;
    worst_berger = std::max(worst_berger, rb.fitted_M);
    worst_linear = std::max(worst_linear, rl.fitted_M);
  }
  c.pass = ok;
  c.metrics = {{"gamma_star", gamma_star}, {"radius", ctx.cfg.probes.radius}, {"m_cap", cap}, {"worst_M_berger", worst_berger},
               {"worst_M_linear", worst_linear}};
  c.detail = "worst M " + io::num(worst_berger) + " (linear " + io::num(worst_linear) + ")";
  return c;
}

inline Criterion generator_identities(Context& ctx) {
  Criterion c{9, "generator_identities"};
  const GalerkinSystem& sys = *ctx.sys;
  const spectrum::GammaReport gamma = spectrum::gamma_operator_checks(sys.basis());
  const spectrum::DiscreteGenerator gen = spectrum::assemble_generator(sys);
  std::mt19937_64 rng(ctx.cfg.probes.seed + 9);
  const Vector x0 = galerkin::pack(dynamics::random_state(sys, rng));
  const double t = 0.1, dt = 5e-4;
  const double d1 = spectrum::semigroup_consistency(gen, sys, x0, t, dt, 20);
  const double d2 = spectrum::semigroup_consistency(gen, sys, x0, t, 0.5 * dt, 40);
  const double ratio = d1 / d2;
  double contraction = 0.0;
  for (double T : {0.01, 0.1, 1.0, 10.0}) contraction = std::max(contraction, spectrum::energy_norm_contraction(gen, sys, T));
  c.pass = gamma.pass && ratio >= order_low && ratio <= order_high && contraction <= 1.0 + 1e-10;
  c.metrics = {{"gamma_asymmetry", gamma.asymmetry}, {"gamma_min_eigenvalue", gamma.min_eigenvalue},
               {"gamma_gram_deviation", gamma.gram_deviation}, {"exponential_deviation_dt", d1},
               {"exponential_deviation_half_dt", d2}, {"deviation_ratio", ratio}, {"max_energy_norm", contraction}};
  c.detail = "deviation ratio " + io::num(ratio) + ", max energy norm " + io::num(contraction);
  return c;
}

inline Criterion attractor_regularity(Context& ctx) {
  Criterion c{10, "attractor_regularity"};
  if (ctx.attracted.empty()) {
    c.detail = "no attracted runs";
    return c;
  }
  bool ok = true;
  json runs = json::array();
  for (const auto& tr : ctx.attracted) {
    const dynamics::RegularityReport r = dynamics::attractor_regularity_probe(tr, *ctx.sys, std::min(50.0, ctx.cfg.probes.attract_T));
    ok = ok && r.finite && r.non_growing;
    runs.push_back({{"sup_vt", r.sup_vt}, {"sup_delta_ut", r.sup_delta_ut}, {"sup_utt", r.sup_utt}, {"non_growing", r.non_growing}});
  }
  c.pass = ok;
  c.metrics["runs"] = runs;
  c.detail = std::to_string(ctx.attracted.size()) + " runs";
  return c;
}

// needs every other criterion to have run first
inline Criterion mean_preservation(Context& ctx) {
  Criterion c{5, "mean_preservation"};
  const GalerkinSystem& sys = *ctx.sys;
  std::mt19937_64 rng(ctx.cfg.probes.seed + 5);
  double trace = 0.0;
  for (int k = 0; k < 10; ++k) {
    const galerkin::Fields f = galerkin::reconstruct(dynamics::random_state(sys, rng), sys);
    for (int i = 0; i < sys.grid().nx(); ++i) {
      trace = std::max(trace, std::abs(f.v.values[sys.grid().elastic_faces()[i]] - f.ut.values[i]));
    }
  }
  c.pass = ctx.max_mean_drift <= 1e-10 && trace == 0.0;
  c.metrics = {{"max_mean_drift", ctx.max_mean_drift}, {"trace_mismatch", trace}};
  c.detail = "max drift " + io::num(ctx.max_mean_drift);
  return c;
}

}  // namespace checks

struct Check {
  int id;
  std::string name;
  std::function<Criterion(Context&)> run;
};

// In execution order; criterion 5 aggregates the drift of every run.
inline std::vector<Check> battery() {
  return {{1, "mass_matrix_positivity", checks::mass_positivity},
          {2, "energy_balance", checks::energy_balance},
          {3, "exponential_stability", checks::exponential_stability},
          {4, "lyapunov_construction", checks::lyapunov},
          {6, "force_model_contracts", checks::force_contracts},
          {7, "gradient_structure_equilibria", checks::gradient_structure},
          {8, "quasi_stability", checks::quasi_stability},
          {9, "generator_identities", checks::generator_identities},
          {10, "attractor_regularity", checks::attractor_regularity},
          {5, "mean_preservation", checks::mean_preservation}};
}

inline const Check& find_check(int id) {
  static const std::vector<Check> all = battery();
  for (const auto& c : all) {
    if (c.id == id) return c;
  }
  throw std::invalid_argument("no criterion " + std::to_string(id));
}

inline Criterion run_check(const Check& check, Context& ctx) {
  const auto start = std::chrono::steady_clock::now();
  Criterion c;
  try {
    c = check.run(ctx);
  } catch (const std::exception& e) {
    c.pass = false;
    c.detail = std::string("error: ") + e.what();
  }
  c.id = check.id;
  c.name = check.name;
  c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return c;
}

inline std::vector<Criterion> run_battery(Context& ctx, const std::function<void(const Criterion&)>& report = {}) {
  std::vector<Criterion> out;
  for (const auto& check : battery()) {
    out.push_back(run_check(check, ctx));
    if (report) report(out.back());
  }
  std::sort(out.begin(), out.end(), [](const Criterion& a, const Criterion& b) { return a.id < b.id; });
  return out;
}

}  // namespace plateflow::experiments
