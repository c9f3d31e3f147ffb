#include "plateflow/experiments.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

namespace fs = std::filesystem;
using namespace plateflow;
using experiments::Context;
using io::json;

namespace {

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
};

config::ExperimentConfig load(const Options& o) {
  config::ExperimentConfig c = o.config.empty() ? config::ExperimentConfig{} : config::parse_config(o.config);
  if (const char* env = std::getenv("PLATEFLOW_OUT"); env && *env) c.out_dir = env;
  if (!o.out.empty()) c.out_dir = o.out;
  if (o.seed) c.probes.seed = *o.seed;
  return c;
}

Context context(const Options& o) {
  config::ExperimentConfig c = load(o);
  const fs::path cache = fs::path(c.out_dir) / "cache";
  return Context(std::move(c), cache);
}

fs::path out(const Context& ctx, const std::string& name) { return fs::path(ctx.cfg.out_dir) / name; }

galerkin::State initial_state(const Context& ctx) {
  const auto& sys = *ctx.sys;
  if (ctx.cfg.integration.initial == "zero") return galerkin::zero_state(sys);
  std::mt19937_64 rng(ctx.cfg.probes.seed);
  return dynamics::random_state(sys, rng, ctx.cfg.integration.amplitude);
}

forces::ForceModel beam_model(const Context& ctx) {
  forces::ForceModel m = ctx.model();
  if (m.dimension() == 2) {
    throw config::ConfigError("physics.force = von_karman acts on a 2D plate and cannot drive the beam dynamics");
  }
  return m;
}

int cmd_modes(const Options& o) {
  Context ctx = context(o);
  const auto& b = *ctx.basis;
  io::CsvWriter csv({"kind", "index", "eigenvalue", "residual"});
  json stokes = json::array(), plate = json::array();
  for (std::size_t i = 0; i < b.stokes.size(); ++i) {
    csv.row({0.0, double(i), b.stokes[i].mu, b.stokes[i].residual});
    stokes.push_back(b.stokes[i].mu);
  }
  for (std::size_t j = 0; j < b.plate_modes.size(); ++j) {
    csv.row({1.0, double(j), b.plate_modes[j].kappa, 0.0});
    plate.push_back(b.plate_modes[j].kappa);
  }
  csv.save(out(ctx, "modes.csv"));
  char hash[24];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(ctx.grid.hash()));
  io::write_json(out(ctx, "modes.json"), {{"grid_hash", hash}, {"m", ctx.cfg.m}, {"n", ctx.cfg.n}, {"cache_hit", ctx.cache_hit},
                                          {"stokes_eigenvalues", stokes}, {"plate_eigenvalues", plate}});
  std::cout << "modes: " << b.stokes.size() << " fluid, " << b.plate_modes.size() << " plate" << (ctx.cache_hit ? " (cached)" : "") << "\n";
  return 0;
}

void save_matrix(const fs::path& path, const Matrix& a) {
  std::vector<std::string> header;
  for (Eigen::Index j = 0; j < a.cols(); ++j) header.push_back("c" + std::to_string(j));
  io::CsvWriter csv(header);
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    std::vector<double> row(a.cols());
    for (Eigen::Index j = 0; j < a.cols(); ++j) row[j] = a(i, j);
    csv.row(row);
  }
  csv.save(path);
}

int cmd_assemble(const Options& o) {
  Context ctx = context(o);
  const auto& sys = *ctx.sys;
  save_matrix(out(ctx, "mass.csv"), sys.mass());
  save_matrix(out(ctx, "dissipation.csv"), sys.dissipation());
  save_matrix(out(ctx, "stiffness.csv"), sys.stiffness());
  const double asym = (sys.mass() - sys.mass().transpose()).cwiseAbs().maxCoeff();
  const bool ok = asym <= 1e-12 && sys.mass_min_eigenvalue() > 0.0;
  io::write_json(out(ctx, "assemble.json"), {{"m", sys.m()}, {"n", sys.n()}, {"nu", sys.nu()}, {"mass_asymmetry", asym},
                                             {"mass_min_eigenvalue", sys.mass_min_eigenvalue()}, {"pass", ok}});
  std::cout << "mass matrix: asymmetry " << io::num(asym) << ", min eigenvalue " << io::num(sys.mass_min_eigenvalue()) << "\n";
  return ok ? 0 : 1;
}

int cmd_forces_verify(const Options& o) {
  Context ctx = context(o);
  const experiments::Criterion c = experiments::checks::force_contracts(ctx);
  io::write_json(out(ctx, "forces.json"), experiments::to_json(c));
  std::cout << experiments::line(c) << "\n";
  return c.pass ? 0 : 1;
}

int cmd_simulate(const Options& o) {
  Context ctx = context(o);
  const auto& sys = *ctx.sys;
  const auto& in = ctx.cfg.integration;
  const dynamics::Integrator integ(sys, galerkin::project_forcing(sys, ctx.forcing()), beam_model(ctx), in.dt);
  const dynamics::Trajectory tr = dynamics::simulate(initial_state(ctx), in.T, integ, {in.stride});
  std::vector<std::string> header{"t", "E0", "E", "Estar", "dissipation", "work", "balance_residual", "mean_u"};
  for (int i = 0; i < sys.m(); ++i) header.push_back("alpha" + std::to_string(i));
  for (int j = 0; j < sys.n(); ++j) header.push_back("beta" + std::to_string(j));
  for (int j = 0; j < sys.n(); ++j) header.push_back("betadot" + std::to_string(j));
  io::CsvWriter csv(header);
  for (const auto& s : tr.samples) {
    std::vector<double> row{s.state.t, s.energy.E0, s.energy.E, s.energy.Estar, s.energy.dissipation_integral,
                            s.energy.work_integral, s.energy.balance_residual, s.mean_u};
    const Vector x = galerkin::pack(s.state);
    row.insert(row.end(), x.data(), x.data() + x.size());
    csv.row(row);
  }
  csv.save(out(ctx, "trajectory.csv"));
  io::write_json(out(ctx, "simulate.json"),
                 {{"scheme", tr.scheme}, {"dt", tr.dt}, {"T", in.T}, {"steps", tr.steps}, {"samples", tr.samples.size()},
                  {"model", integ.model().name()}, {"balance_residual", dynamics::energy_balance_residual(tr)},
                  {"max_mean_drift", tr.max_mean_drift}});
  std::cout << "simulate: " << tr.steps << " steps, balance residual " << io::num(dynamics::energy_balance_residual(tr)) << "\n";
  return 0;
}

int cmd_stationary(const Options& o) {
  Context ctx = context(o);
  const auto& sys = *ctx.sys;
  const galerkin::Forcing f = ctx.forcing();
  const mesh::VelocityField g0 = f.fluid.values.size() ? f.fluid : mesh::VelocityField{Vector::Zero(ctx.grid.num_faces())};
  const steady::StationaryStokes stokes = steady::solve_stationary_stokes(g0, *sys.basis().fluid, sys.nu());
  steady::MinimizeOptions opt;
  opt.starts = ctx.cfg.probes.starts;
  opt.seed = ctx.cfg.probes.seed;
  const auto all = steady::minimize_stationary_all(beam_model(ctx), stokes, sys, nullptr, f.plate.values.size() ? &f.plate : nullptr, opt);
  json list = json::array();
  for (const auto& e : all) {
    list.push_back({{"beta", io::to_json(e.beta)}, {"alpha_star", io::to_json(e.alpha_star)}, {"residual", e.residual}, {"Estar", e.energy}});
  }
  io::write_json(out(ctx, "stationary.json"), {{"p_star", io::to_json(stokes.p_star.values)}, {"equilibria", list}});
  std::cout << "stationary: " << all.size() << " equilibria\n";
  return 0;
}

int cmd_attract(const Options& o) {
  Context ctx = context(o);
  const auto& sys = *ctx.sys;
  const steady::Convergence c = steady::converge_to_equilibrium(initial_state(ctx), beam_model(ctx), ctx.forcing(), ctx.cfg.probes.attract_T,
                                                                ctx.cfg.integration.dt, sys, ctx.cfg.integration.stride);
  io::CsvWriter csv({"t", "distance", "ut_norm", "Estar"});
  for (std::size_t k = 0; k < c.times.size(); ++k) csv.row({c.times[k], c.distances[k], c.ut_norms[k], c.estar[k]});
  csv.save(out(ctx, "attract.csv"));
  io::write_json(out(ctx, "attract.json"), {{"final_distance", c.final_distance}, {"final_ut_norm", c.final_ut},
                                            {"converged", c.converged}, {"equilibrium_beta", io::to_json(c.equilibrium.beta)},
                                            {"equilibrium_residual", c.equilibrium.residual}});
  std::cout << "attract: final distance " << io::num(c.final_distance) << (c.converged ? " (converged)" : " (not converged)") << "\n";
  return c.converged ? 0 : 1;
}

int cmd_spectrum(const Options& o) {
  Context ctx = context(o);
  const auto& sys = *ctx.sys;
  const spectrum::DiscreteGenerator gen = spectrum::assemble_generator(sys);
  const Eigen::VectorXcd ev = spectrum::eigenvalues(gen);
  std::vector<std::pair<double, double>> sorted;
  for (const auto& z : ev) sorted.emplace_back(z.real(), z.imag());
  std::sort(sorted.begin(), sorted.end(), [](auto a, auto b) { return a.first != b.first ? a.first > b.first : a.second > b.second; });
  io::CsvWriter csv({"re", "im"});
  for (auto [re, im] : sorted) csv.row({re, im});
  csv.save(out(ctx, "eigenvalues.csv"));
  const double abscissa = spectrum::spectral_abscissa(gen);
  double contraction = 0.0;
  for (double T : {0.01, 0.1, 1.0, 10.0}) contraction = std::max(contraction, spectrum::energy_norm_contraction(gen, sys, T));
  const spectrum::GammaReport gamma = spectrum::gamma_operator_checks(sys.basis());
  const bool ok = abscissa < 0.0 && contraction <= 1.0 + 1e-10 && gamma.pass;
  io::write_json(out(ctx, "spectrum.json"), {{"spectral_abscissa", abscissa}, {"stable", abscissa < 0.0}, {"max_energy_norm", contraction},
                                             {"contraction", contraction <= 1.0 + 1e-10}, {"gamma_gram_deviation", gamma.gram_deviation},
                                             {"gamma_min_eigenvalue", gamma.min_eigenvalue}, {"gamma_pass", gamma.pass}, {"pass", ok}});
  std::cout << "spectrum: abscissa " << io::num(abscissa) << ", max energy norm " << io::num(contraction) << "\n";
  return ok ? 0 : 1;
}

int cmd_quasistability(const Options& o) {
  Context ctx = context(o);
  const experiments::Criterion rate = experiments::run_check(experiments::find_check(3), ctx);
  const experiments::Criterion c = experiments::run_check(experiments::find_check(8), ctx);
  io::write_json(out(ctx, "quasistability.json"), {{"linear_rate", ctx.linear_rate}, {"result", experiments::to_json(c)}});
  std::cout << experiments::line(c) << "\n";
  return rate.pass && c.pass ? 0 : 1;
}

int cmd_verify_all(const Options& o) {
  Context ctx = context(o);
  const auto results = experiments::run_battery(ctx, [](const experiments::Criterion& c) { std::cout << experiments::line(c) << std::endl; });
  bool all = true;
  json list = json::array();
  for (const auto& c : results) {
    all = all && c.pass;
    list.push_back(experiments::to_json(c));
  }
  io::write_json(out(ctx, "summary.json"), {{"all_pass", all}, {"criteria", list}});
  std::cout << (all ? "all criteria passed" : "some criteria failed") << "\n";
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fluid-plate interaction experiments"};
  app.require_subcommand(1);
  Options opt;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config, "INI configuration file")->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out, "output directory");
    sub->add_option_function<std::uint64_t>(
        "--seed", [&opt](const std::uint64_t& s) { opt.seed = s; }, "random seed, overrides probes.seed");
  };
  std::function<int(const Options&)> action;
  auto add = [&](CLI::App* parent, const std::string& name, const std::string& help, int (*fn)(const Options&)) {
    CLI::App* sub = parent->add_subcommand(name, help);
    add_common(sub);
    sub->callback([&action, fn] { action = fn; });
    return sub;
  };
  add(&app, "modes", "compute or load the fluid and plate eigenmodes", cmd_modes);
  add(&app, "assemble", "assemble the Galerkin matrices", cmd_assemble);
  CLI::App* forces_cmd = app.add_subcommand("forces", "force model checks");
  forces_cmd->require_subcommand(1);
  add(forces_cmd, "verify", "gradient, coercivity, Airy and bracket checks", cmd_forces_verify);
  add(&app, "simulate", "integrate the coupled system", cmd_simulate);
  add(&app, "stationary", "find stationary plate deflections", cmd_stationary);
  add(&app, "attract", "track the distance to an equilibrium", cmd_attract);
  add(&app, "spectrum", "eigenvalues of the linear generator", cmd_spectrum);
  add(&app, "quasistability", "quasi-stability probe on trajectory pairs", cmd_quasistability);
  add(&app, "verify-all", "run every acceptance check", cmd_verify_all);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    return action(opt);
  } catch (const config::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
