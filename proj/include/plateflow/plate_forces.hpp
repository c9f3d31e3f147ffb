#pragma once

#include "plateflow/mesh.hpp"
#include "plateflow/modal_basis.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <random>
#include <string>
#include <variant>
#include <vector>

namespace plateflow::forces {

using mesh::PlateFunction;
using mesh::PlateFunction2D;
using mesh::PlateGrid;
using mesh::PlateGrid2D;

// c[0] + c[1] s + c[2] s^2 + ...
struct Polynomial {
  std::vector<double> coeffs;

  double operator()(double s) const {
    double r = 0.0;
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) r = r * s + *it;
    return r;
  }

  double antiderivative(double s) const {
    double r = 0.0;
    for (std::size_t k = coeffs.size(); k-- > 0;) r = r * s + coeffs[k] / static_cast<double>(k + 1);
    return r * s;
  }

  int degree() const {
    for (std::size_t k = coeffs.size(); k-- > 0;) {
      if (coeffs[k] != 0.0) return static_cast<int>(k);
    }
    return -1;
  }

  // lim inf of f(s)/s as |s| -> infinity
  double liminf_ratio() const {
    const int d = degree();
    if (d <= 0) return 0.0;
    if (d == 1) return coeffs[1];
    if (d % 2 == 0) return -std::numeric_limits<double>::infinity();
    return coeffs[d] > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
  }
};

struct NoForce {};

struct Kirchhoff {
  double kappa = 0.0;
  double q = 2.0;
  double r = 0.0;
  double mu = 0.0;
  Polynomial f{{0.0, -1.0, 0.0, 1.0}};
  Vector h;  // empty means zero
};

struct Berger {
  double kappa = 1.0;
  double gamma = 0.0;
  Vector h;
};

struct VonKarman {
  Vector f0;  // full-grid nodal values, empty means zero
  Vector h;
};

using ForceSpec = std::variant<NoForce, Kirchhoff, Berger, VonKarman>;

// Clamped biharmonic solve on a square plate, factorized once.
class AiryOperator {
 public:
  explicit AiryOperator(std::shared_ptr<const PlateGrid2D> grid) : grid_(std::move(grid)) {
    solver_.compute(grid_->bending());
    if (solver_.info() != Eigen::Success) throw std::runtime_error("clamped biharmonic factorization failed");
  }

  const PlateGrid2D& grid() const { return *grid_; }

  // v on the full grid with Δ²v = rhs at interior nodes, clamped.
  Vector solve(const Vector& rhs) const {
    const auto& r = grid_->restriction();
    const Vector load = r.transpose() * grid_->weights().cwiseProduct(rhs);
    return r * solver_.solve(load);
  }

  // Δ²v at interior nodes (zero on the boundary)
  Vector apply(const Vector& v) const {
    const auto& r = grid_->restriction();
    const Vector interior = r.transpose() * v;
    const Vector w = r.transpose() * grid_->weights();
    return r * (grid_->bending() * interior).cwiseQuotient(w);
  }

 private:
  std::shared_ptr<const PlateGrid2D> grid_;
  Eigen::SimplicialLDLT<SparseMatrix> solver_;
};

class ForceModel {
 public:
  ForceModel() = default;

  static ForceModel none() { return ForceModel(); }

  static ForceModel kirchhoff(Kirchhoff k, std::shared_ptr<const PlateGrid> grid) {
    if (!(k.kappa >= 0.0)) throw std::invalid_argument("Kirchhoff model requires kappa >= 0");
    if (!(k.r >= 0.0) || !(k.q > k.r)) throw std::invalid_argument("Kirchhoff model requires q > r >= 0");
    check_load(k.h, grid->size());
    const auto modes = modal::solve_plate_eigenmodes(*grid, 1);
    const double lambda1 = modes.front().kappa;
    if (!(k.f.liminf_ratio() > -lambda1)) {
      throw std::invalid_argument("Kirchhoff nonlinearity violates liminf f(s)/s > -lambda_1 (lambda_1 = " +
                                  std::to_string(lambda1) + ")");
    }
    ForceModel m;
    m.spec_ = std::move(k);
    m.plate_ = std::move(grid);
    return m;
  }

  static ForceModel berger(Berger b, std::shared_ptr<const PlateGrid> grid) {
    if (!(b.kappa > 0.0)) throw std::invalid_argument("Berger model requires kappa > 0");
    check_load(b.h, grid->size());
    ForceModel m;
    m.spec_ = std::move(b);
    m.plate_ = std::move(grid);
    return m;
  }

  static ForceModel von_karman(VonKarman v, std::shared_ptr<const PlateGrid2D> grid) {
    if (!grid) throw std::invalid_argument("von Karman model requires a 2D plate grid");
    check_load(v.f0, grid->num_nodes());
    check_load(v.h, grid->num_nodes());
    ForceModel m;
    m.spec_ = std::move(v);
    m.airy_ = std::make_shared<const AiryOperator>(grid);
    m.plate2d_ = std::move(grid);
    return m;
  }

  const ForceSpec& spec() const { return spec_; }
  bool is_none() const { return std::holds_alternative<NoForce>(spec_); }
  // 0: dimension-free (no force), 1: beam, 2: square plate
  int dimension() const {
    if (is_none()) return 0;
    return std::holds_alternative<VonKarman>(spec_) ? 2 : 1;
  }
  std::string name() const {
    switch (spec_.index()) {
      case 0: return "none";
      case 1: return "kirchhoff";
      case 2: return "berger";
      default: return "von_karman";
    }
  }
  const std::shared_ptr<const PlateGrid>& plate() const { return plate_; }
  const std::shared_ptr<const PlateGrid2D>& plate2d() const { return plate2d_; }
  const AiryOperator& airy() const { return *airy_; }

 private:
  static void check_load(const Vector& h, int n) {
    if (h.size() != 0 && h.size() != n) throw std::invalid_argument("force load does not match the plate grid");
  }

  ForceSpec spec_ = NoForce{};
  std::shared_ptr<const PlateGrid> plate_;
  std::shared_ptr<const PlateGrid2D> plate2d_;
  std::shared_ptr<const AiryOperator> airy_;
};

// [u, v] at interior nodes, zero on the boundary.
inline Vector bracket(const PlateGrid2D& g, const Vector& u, const Vector& v) {
  const Vector uxx = g.dxx() * u, uyy = g.dyy() * u, uxy = g.dxy() * u;
  const Vector vxx = g.dxx() * v, vyy = g.dyy() * v, vxy = g.dxy() * v;
  return (uxx.cwiseProduct(vyy) + uyy.cwiseProduct(vxx) - 2.0 * uxy.cwiseProduct(vxy)).eval();
}

inline PlateFunction2D vk_bracket(const PlateFunction2D& u, const PlateFunction2D& v, const PlateGrid2D& g) {
  if (u.values.size() != g.num_nodes() || v.values.size() != g.num_nodes()) {
    throw std::invalid_argument("bracket arguments do not match the plate grid");
  }
  return {bracket(g, u.values, v.values)};
}

struct AiryResult {
  PlateFunction2D stress;
  double relative_residual = 0.0;
};

inline AiryResult airy_stress(const PlateFunction2D& u, const AiryOperator& op) {
  const PlateGrid2D& g = op.grid();
  if (u.values.size() != g.num_nodes()) throw std::invalid_argument("deflection does not match the plate grid");
  const Vector b = bracket(g, u.values, u.values);
  AiryResult out;
  out.stress.values = op.solve(-b);
  const double scale = std::sqrt(g.inner(b, b));
  const Vector res = op.apply(out.stress.values) + b;
  out.relative_residual = scale > 0 ? std::sqrt(g.inner(res, res)) / scale : std::sqrt(g.inner(res, res));
  return out;
}

inline AiryResult airy_stress(const PlateFunction2D& u, const ForceModel& model) {
  if (model.dimension() != 2) throw std::invalid_argument("Airy stress needs a von Karman model");
  return airy_stress(u, model.airy());
}

namespace detail {

inline double load_work(const Vector& h, const Vector& u, const Vector& w) {
  return h.size() == 0 ? 0.0 : h.dot(w.cwiseProduct(u));
}

inline void subtract_load(Vector& f, const Vector& h) {
  if (h.size() != 0) f -= h;
}

// L_phi u = b(u, phi)
inline SparseMatrix bracket_matrix(const PlateGrid2D& g, const Vector& phi) {
  const Vector pxx = g.dxx() * phi, pyy = g.dyy() * phi, pxy = g.dxy() * phi;
  SparseMatrix m = pyy.asDiagonal() * g.dxx();
  m += SparseMatrix(pxx.asDiagonal() * g.dyy());
  m -= SparseMatrix(2.0 * pxy.asDiagonal() * g.dxy());
  return m;
}

inline Vector kirchhoff_force(const Kirchhoff& k, const PlateGrid& p, const Vector& u) {
  Vector f = u.unaryExpr([&](double s) { return k.f(s); });
  if (k.kappa != 0.0) {
    const Vector g = p.gradient() * u;
    Vector flux = g.unaryExpr([&](double s) {
      return std::pow(std::abs(s), k.q) * s - k.mu * std::pow(std::abs(s), k.r) * s;
    });
    f += k.kappa * p.gradient_weight() * (p.gradient().transpose() * flux) / p.spacing();
  }
  subtract_load(f, k.h);
  return f;
}

inline double kirchhoff_potential(const Kirchhoff& k, const PlateGrid& p, const Vector& u) {
  double pi = 0.0;
  for (double s : u) pi += k.f.antiderivative(s);
  pi *= p.spacing();
  if (k.kappa != 0.0) {
    const Vector g = p.gradient() * u;
    double a = 0.0, b = 0.0;
    for (double s : g) {
      a += std::pow(std::abs(s), k.q + 2);
      b += std::pow(std::abs(s), k.r + 2);
    }
    pi += k.kappa * p.gradient_weight() * (a / (k.q + 2) - k.mu * b / (k.r + 2));
  }
  return pi - (k.h.size() == 0 ? 0.0 : p.inner(k.h, u));
}

inline Vector berger_force(const Berger& b, const PlateGrid& p, const Vector& u) {
  const Vector su = p.stiffness() * u;
  Vector f = (b.kappa * u.dot(su) - b.gamma) * su / p.spacing();
  subtract_load(f, b.h);
  return f;
}

inline double berger_potential(const Berger& b, const PlateGrid& p, const Vector& u) {
  const double g2 = u.dot(p.stiffness() * u);
  return 0.25 * b.kappa * g2 * g2 - 0.5 * b.gamma * g2 - (b.h.size() == 0 ? 0.0 : p.inner(b.h, u));
}

inline Vector interior_weights(const PlateGrid2D& g) {
  Vector w = g.weights();
  for (int j = 0; j <= g.cells(); ++j) {
    for (int i = 0; i <= g.cells(); ++i) {
      if (!g.interior(i, j)) w[g.node(i, j)] = 0.0;
    }
  }
  return w;
}

inline Vector vk_force(const VonKarman& vk, const AiryOperator& op, const Vector& u) {
  const PlateGrid2D& g = op.grid();
  const Vector w = interior_weights(g);
  const Vector v = op.solve(-bracket(g, u, u));
  const SparseMatrix lu = bracket_matrix(g, u);
  Vector acc = lu.transpose() * w.cwiseProduct(v);
  if (vk.f0.size() != 0) {
    const SparseMatrix lf = bracket_matrix(g, vk.f0);
    acc += 0.5 * (w.cwiseProduct(lf * u) + lf.transpose() * w.cwiseProduct(u));
  }
  Vector f = Vector::Zero(u.size());
  for (int j = 1; j < g.cells(); ++j) {
    for (int i = 1; i < g.cells(); ++i) {
      const int k = g.node(i, j);
      f[k] = -acc[k] / w[k] - (vk.h.size() == 0 ? 0.0 : vk.h[k]);
    }
  }
  return f;
}

inline double vk_potential(const VonKarman& vk, const AiryOperator& op, const Vector& u) {
  const PlateGrid2D& g = op.grid();
  const Vector w = interior_weights(g);
  const Vector v = op.solve(-bracket(g, u, u));
  const Vector vi = g.restriction().transpose() * v;
  double pi = 0.25 * vi.dot(g.bending() * vi);
  if (vk.f0.size() != 0) pi -= 0.5 * w.cwiseProduct(bracket(g, u, vk.f0)).dot(u);
  return pi - load_work(vk.h, u, w);
}

}  // namespace detail

// Force and potential on raw nodal vectors; the model decides the layout.
inline Vector force_values(const ForceModel& model, const Vector& u) {
  return std::visit(
      [&](const auto& s) -> Vector {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, NoForce>) {
          return Vector::Zero(u.size());
        } else if constexpr (std::is_same_v<T, Kirchhoff>) {
          return detail::kirchhoff_force(s, *model.plate(), u);
        } else if constexpr (std::is_same_v<T, Berger>) {
          return detail::berger_force(s, *model.plate(), u);
        } else {
          return detail::vk_force(s, model.airy(), u);
        }
      },
      model.spec());
}

inline double potential_value(const ForceModel& model, const Vector& u) {
  return std::visit(
      [&](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, NoForce>) {
          return 0.0;
        } else if constexpr (std::is_same_v<T, Kirchhoff>) {
          return detail::kirchhoff_potential(s, *model.plate(), u);
        } else if constexpr (std::is_same_v<T, Berger>) {
          return detail::berger_potential(s, *model.plate(), u);
        } else {
          return detail::vk_potential(s, model.airy(), u);
        }
      },
      model.spec());
}

inline void require_dimension(const ForceModel& model, int dim, Eigen::Index size) {
  if (model.dimension() != 0 && model.dimension() != dim) {
    throw std::invalid_argument("force model " + model.name() + " does not act on " + std::to_string(dim) + "D plates");
  }
  const Eigen::Index expected = model.dimension() == 1   ? model.plate()->size()
                                : model.dimension() == 2 ? model.plate2d()->num_nodes()
                                                         : size;
  if (size != expected) throw std::invalid_argument("plate function does not match the force model grid");
}

inline PlateFunction force(const ForceModel& model, const PlateFunction& u) {
  require_dimension(model, 1, u.values.size());
  return {force_values(model, u.values)};
}

inline PlateFunction2D force(const ForceModel& model, const PlateFunction2D& u) {
  require_dimension(model, 2, u.values.size());
  return {force_values(model, u.values)};
}

inline double potential(const ForceModel& model, const PlateFunction& u) {
  require_dimension(model, 1, u.values.size());
  return potential_value(model, u.values);
}

inline double potential(const ForceModel& model, const PlateFunction2D& u) {
  require_dimension(model, 2, u.values.size());
  return potential_value(model, u.values);
}

// Quadrature weights of the plate inner product for the model's grid.
inline Vector plate_weights(const ForceModel& model, Eigen::Index size) {
  if (model.dimension() == 2) return model.plate2d()->weights();
  if (model.dimension() == 1) return Vector::Constant(size, model.plate()->spacing());
  return Vector::Constant(size, 1.0 / static_cast<double>(size));
}

// (Δu, Δu) in the model's plate discretization.
inline double bending_energy(const ForceModel& model, const Vector& u) {
  if (model.dimension() == 2) {
    const Vector ui = model.plate2d()->restriction().transpose() * u;
    return ui.dot(model.plate2d()->bending() * ui);
  }
  if (model.dimension() == 1) return u.dot(model.plate()->bending() * u);
  return 0.0;
}

// Smooth random field: sine series with decaying coefficients; clamped
// shapes (value and slope vanish at the edges) when requested.
inline Vector smooth_direction(const ForceModel& model, Eigen::Index size, std::mt19937_64& rng, bool clamped) {
  std::normal_distribution<double> nd;
  constexpr double pi = std::numbers::pi;
  if (model.dimension() == 2) {
    const PlateGrid2D& g = *model.plate2d();
    Vector d = Vector::Zero(g.num_nodes());
    for (int k = 1; k <= 4; ++k) {
      for (int l = 1; l <= 4; ++l) {
        const double a = nd(rng) / (k * l);
        const double lx = g.length();
        d += a * g.sample([&](double x, double y) {
          const double bump = clamped ? std::sin(pi * x / lx) * std::sin(pi * y / lx) : 1.0;
          return bump * std::sin(k * pi * x / lx) * std::sin(l * pi * y / lx);
        });
      }
    }
    for (int j = 0; j <= g.cells(); ++j) {
      for (int i = 0; i <= g.cells(); ++i) {
        if (!g.interior(i, j)) d[g.node(i, j)] = 0.0;
      }
    }
    return d;
  }
  const double len = model.dimension() == 1 ? model.plate()->length() : 1.0;
  Vector d = Vector::Zero(size);
  for (int k = 1; k <= 6; ++k) {
    const double a = nd(rng) / k;
    for (Eigen::Index i = 0; i < size; ++i) {
      const double x = (i + 0.5) * len / static_cast<double>(size);
      const double bump = clamped ? std::sin(pi * x / len) : 1.0;
      d[i] += a * bump * std::sin(k * pi * x / len);
    }
  }
  return d;
}

// Max over random directions d of |Π(u+hd) - Π(u-hd) - 2h(F(u),d)| / (2h),
// relative to 1 + |(F(u),d)|.
inline double verify_gradient(const ForceModel& model, const Vector& u, double h_fd, std::uint64_t seed, int directions = 10) {
  if (!(h_fd >= 1e-7 && h_fd <= 1e-3)) throw std::invalid_argument("finite-difference step must lie in [1e-7, 1e-3]");
  std::mt19937_64 rng(seed);
  const Vector w = plate_weights(model, u.size());
  const Vector f = force_values(model, u);
  double worst = 0.0;
  for (int k = 0; k < directions; ++k) {
    Vector d = smooth_direction(model, u.size(), rng, true);
    d /= std::sqrt(d.dot(w.cwiseProduct(d)));
    const double fd = (potential_value(model, u + h_fd * d) - potential_value(model, u - h_fd * d)) / (2 * h_fd);
    const double an = f.dot(w.cwiseProduct(d));
    worst = std::max(worst, std::abs(fd - an) / (1.0 + std::abs(an)));
  }
  return worst;
}

template <class Fn>
double verify_gradient(const ForceModel& model, const Fn& u, double h_fd, std::uint64_t seed = 1) {
  return verify_gradient(model, u.values, h_fd, seed);
}

struct LipschitzReport {
  double constant = 0.0;
  double min_ratio = 0.0;
  std::vector<double> ratios;
};

// Spectral surrogate norms on the zero-mean mode basis: strong norm with
// weights kappa^{(2-eps)/2}, eps = 1/2, weak norm with weights kappa^{-1/8}.
inline LipschitzReport verify_lipschitz(const ForceModel& model, const std::vector<modal::PlateMode>& basis, double radius,
                                        int trials, std::uint64_t seed) {
  if (trials < 10) throw std::invalid_argument("Lipschitz probe needs at least 10 trials");
  LipschitzReport rep;
  if (model.is_none() || basis.empty()) return rep;
  if (model.dimension() != 1) throw std::invalid_argument("Lipschitz probe runs on beam models");
  const PlateGrid& p = *model.plate();
  const int n = static_cast<int>(basis.size());
  Matrix xi(p.size(), n);
  Vector strong(n), weak(n);
  for (int j = 0; j < n; ++j) {
    xi.col(j) = basis[j].xi.values;
    strong[j] = std::pow(basis[j].kappa, 0.75);
    weak[j] = std::pow(basis[j].kappa, -0.125);
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  auto sample = [&]() {
    Vector c(n);
    for (auto& x : c) x = nd(rng);
    c /= std::sqrt(c.dot(strong.cwiseProduct(c)));
    return Vector(c * radius * ud(rng));
  };
  rep.min_ratio = std::numeric_limits<double>::infinity();
  for (int t = 0; t < trials; ++t) {
    const Vector c1 = sample(), c2 = sample();
    const Vector df = force_values(model, xi * c1) - force_values(model, xi * c2);
    const Vector dc = p.spacing() * (xi.transpose() * df);
    const Vector du = c1 - c2;
    const double ratio = std::sqrt(dc.dot(weak.cwiseProduct(dc)) / du.dot(strong.cwiseProduct(du)));
    rep.ratios.push_back(ratio);
    rep.constant = std::max(rep.constant, ratio);
    rep.min_ratio = std::min(rep.min_ratio, ratio);
  }
  return rep;
}

struct CoercivityReport {
  double worst = 0.0;           // min of eta |Δu|² + Π(u) over the sweep
  double worst_pairing = 0.0;   // min of eta |Δu|² + (u, F(u))
  bool pass = false;
  std::vector<double> amplitudes, worst_by_amplitude, pairing_by_amplitude;
};

inline constexpr double coercivity_eta = 0.25;

// Amplitude sweep over random clamped shapes, doubling until the worst
// value is positive and increasing (bounded below) or the sweep runs out.
inline CoercivityReport verify_coercivity(const ForceModel& model, int trials, std::uint64_t seed) {
  CoercivityReport rep;
  if (model.is_none()) {
    rep.pass = true;
    return rep;
  }
  const Eigen::Index n = model.dimension() == 1 ? model.plate()->size() : model.plate2d()->num_nodes();
  std::mt19937_64 rng(seed);
  const Vector w = plate_weights(model, n);
  std::vector<Vector> dirs;
  for (int t = 0; t < trials; ++t) {
    Vector d = smooth_direction(model, n, rng, true);
    d /= std::sqrt(bending_energy(model, d));
    dirs.push_back(d);
  }
  for (int k = -6; k <= 40; ++k) {
    const double a = std::ldexp(1.0, k);
    double worst = std::numeric_limits<double>::infinity(), pairing = worst;
    for (const auto& d : dirs) {
      const Vector u = a * d;
      const double base = coercivity_eta * a * a;
      worst = std::min(worst, base + potential_value(model, u));
      pairing = std::min(pairing, base + u.dot(w.cwiseProduct(force_values(model, u))));
    }
    rep.amplitudes.push_back(a);
    rep.worst_by_amplitude.push_back(worst);
    rep.pairing_by_amplitude.push_back(pairing);
    const auto& v = rep.worst_by_amplitude;
    const std::size_t last = v.size() - 1;
    if (last >= 2 && v[last] > 0.0 && v[last] > v[last - 1] && v[last - 1] > v[last - 2]) {
      rep.pass = true;
      break;
    }
  }
  rep.worst = *std::min_element(rep.worst_by_amplitude.begin(), rep.worst_by_amplitude.end());
  rep.worst_pairing = *std::min_element(rep.pairing_by_amplitude.begin(), rep.pairing_by_amplitude.end());
  rep.pass = rep.pass && std::isfinite(rep.worst);
  return rep;
}

}  // namespace plateflow::forces
