#pragma once

#include "plateflow/modal_basis.hpp"
#include "plateflow/plate_forces.hpp"

#include <Eigen/Cholesky>

#include <functional>
#include <memory>
#include <sstream>

namespace plateflow::galerkin {

using mesh::Grid;
using mesh::PlateFunction;
using mesh::VelocityField;

inline constexpr double trace_tol = 1e-8;

struct State {
  double t = 0.0;
  Vector alpha;
  Vector beta;
  Vector betadot;
  // (I - P)u0 = offset * w0, carried unchanged
  double offset = 0.0;
};

// time profiles default to 1
struct Forcing {
  VelocityField fluid;
  PlateFunction plate;
  std::function<double(double)> fluid_time;
  std::function<double(double)> plate_time;
};

struct ProjectedForcing {
  Vector fluid;  // (G_f, ψ_k), (G_f, φ_k)
  Vector plate;  // (G_pl, ξ_k)
  std::function<double(double)> fluid_time;
  std::function<double(double)> plate_time;

  bool empty() const { return fluid.size() == 0 && plate.size() == 0; }
  bool autonomous() const { return !fluid_time && !plate_time; }
  double fluid_scale(double t) const { return fluid_time ? fluid_time(t) : 1.0; }
  double plate_scale(double t) const { return plate_time ? plate_time(t) : 1.0; }
};

class GalerkinSystem {
 public:
  GalerkinSystem(std::shared_ptr<const modal::ModalBasis> basis, double nu) : basis_(std::move(basis)), nu_(nu) {
    if (!(nu_ > 0.0)) throw std::invalid_argument("viscosity must be positive");
    const Grid& g = basis_->fluid->grid();
    m_ = static_cast<int>(basis_->stokes.size());
    n_ = static_cast<int>(basis_->plate_modes.size());
    if (static_cast<int>(basis_->lifted.size()) != n_) throw std::invalid_argument("lifted modes do not match plate modes");
    if (basis_->plate->size() != g.nx()) throw std::invalid_argument("mode lists were computed on different grids");
    fluid_basis_.resize(g.num_faces(), m_ + n_);
    for (int i = 0; i < m_; ++i) {
      if (basis_->stokes[i].field.values.size() != g.num_faces()) throw std::invalid_argument("Stokes mode does not match grid");
      fluid_basis_.col(i) = basis_->stokes[i].field.values;
    }
    for (int j = 0; j < n_; ++j) fluid_basis_.col(m_ + j) = basis_->lifted[j].phi.values;
    plate_basis_.resize(g.nx(), n_);
    for (int j = 0; j < n_; ++j) plate_basis_.col(j) = basis_->plate_modes[j].xi.values;

    const double h = basis_->plate->spacing();
    const Matrix wf = g.face_weights().asDiagonal() * fluid_basis_;
    fluid_gram_ = fluid_basis_.transpose() * wf;
    plate_gram_ = h * plate_basis_.transpose() * plate_basis_;
    mass_ = fluid_gram_;
    mass_.bottomRightCorner(n_, n_) += plate_gram_;
    mass_ = 0.5 * (mass_ + mass_.transpose()).eval();
    const Matrix af = g.dirichlet_form() * fluid_basis_;
    dissipation_ = nu_ * fluid_basis_.transpose() * af;
    dissipation_ = 0.5 * (dissipation_ + dissipation_.transpose()).eval();
    stiffness_ = plate_basis_.transpose() * basis_->plate->bending() * plate_basis_;
    stiffness_ = 0.5 * (stiffness_ + stiffness_.transpose()).eval();

    if (m_ + n_ > 0) {
      Eigen::SelfAdjointEigenSolver<Matrix> es(mass_, Eigen::EigenvaluesOnly);
      mass_min_eig_ = es.eigenvalues().minCoeff();
      if (!(mass_min_eig_ > 0.0)) {
        std::ostringstream os;
        os << "mass matrix is not positive definite: smallest eigenvalue " << mass_min_eig_;
        throw std::runtime_error(os.str());
      }
      mass_llt_.compute(mass_);
    }
    projector_ = std::make_shared<const modal::PlateProjector>(*basis_->plate);
    const Vector& w0 = projector_->complement();
    offset_bending_ = w0.dot(basis_->plate->bending() * w0);
  }

  int m() const { return m_; }
  int n() const { return n_; }
  int dim() const { return m_ + 2 * n_; }
  double nu() const { return nu_; }
  const modal::ModalBasis& basis() const { return *basis_; }
  const std::shared_ptr<const modal::ModalBasis>& basis_ptr() const { return basis_; }
  const Grid& grid() const { return basis_->fluid->grid(); }
  const mesh::PlateGrid& plate() const { return *basis_->plate; }
  const modal::PlateProjector& projector() const { return *projector_; }

  // blocks ordered (ψ_1..ψ_m, φ_1..φ_n)
  const Matrix& mass() const { return mass_; }
  const Matrix& dissipation() const { return dissipation_; }
  const Matrix& stiffness() const { return stiffness_; }
  const Matrix& fluid_gram() const { return fluid_gram_; }
  const Matrix& plate_gram() const { return plate_gram_; }
  const Matrix& fluid_basis() const { return fluid_basis_; }
  const Matrix& plate_basis() const { return plate_basis_; }
  double mass_min_eigenvalue() const { return mass_min_eig_; }
  double offset_bending() const { return offset_bending_; }

  Vector solve_mass(const Vector& rhs) const { return mass_llt_.solve(rhs); }
  Matrix solve_mass(const Matrix& rhs) const { return mass_llt_.solve(rhs); }

  // Y = (α, β̇)
  Vector velocity_coefficients(const State& s) const {
    Vector y(m_ + n_);
    y << s.alpha, s.betadot;
    return y;
  }

  Vector deflection(const State& s) const {
    return plate_basis_ * s.beta + s.offset * projector_->complement();
  }

 private:
  std::shared_ptr<const modal::ModalBasis> basis_;
  double nu_;
  int m_ = 0, n_ = 0;
  Matrix fluid_basis_, plate_basis_;
  Matrix fluid_gram_, plate_gram_, mass_, dissipation_, stiffness_;
  Eigen::LLT<Matrix> mass_llt_;
  double mass_min_eig_ = 0.0;
  double offset_bending_ = 0.0;
  std::shared_ptr<const modal::PlateProjector> projector_;
};

inline GalerkinSystem assemble(std::shared_ptr<const modal::ModalBasis> basis, double nu) {
  return GalerkinSystem(std::move(basis), nu);
}

inline GalerkinSystem assemble(const std::vector<modal::StokesMode>& fluid, const std::vector<modal::PlateMode>& plate,
                               const std::vector<modal::LiftedMode>& lifted, std::shared_ptr<const modal::FluidOperators> ops,
                               double nu) {
  auto b = std::make_shared<modal::ModalBasis>();
  b->fluid = std::move(ops);
  b->plate = std::make_shared<const mesh::PlateGrid>(b->fluid->grid());
  b->stokes = fluid;
  b->plate_modes = plate;
  b->lifted = lifted;
  return GalerkinSystem(std::move(b), nu);
}

inline State zero_state(const GalerkinSystem& sys) {
  return {0.0, Vector::Zero(sys.m()), Vector::Zero(sys.n()), Vector::Zero(sys.n()), 0.0};
}

// X = (α, β, β̇)
inline Vector pack(const State& s) {
  Vector x(s.alpha.size() + 2 * s.beta.size());
  x << s.alpha, s.beta, s.betadot;
  return x;
}

inline State unpack(const Vector& x, const GalerkinSystem& sys, double t, double offset) {
  const int m = sys.m(), n = sys.n();
  return {t, x.head(m), x.segment(m, n), x.tail(n), offset};
}

inline ProjectedForcing project_forcing(const GalerkinSystem& sys, const Forcing& f) {
  ProjectedForcing p;
  if (f.fluid.values.size() != 0) {
    mesh::check_conforming(f.fluid, sys.grid());
    p.fluid = sys.fluid_basis().transpose() * sys.grid().face_weights().cwiseProduct(f.fluid.values);
  }
  if (f.plate.values.size() != 0) {
    mesh::check_conforming(f.plate, sys.plate());
    p.plate = sys.plate().spacing() * (sys.plate_basis().transpose() * f.plate.values);
  }
  p.fluid_time = f.fluid_time;
  p.plate_time = f.plate_time;
  return p;
}

// Right-hand side of M Ẏ = ... without the linear terms.
inline Vector load_vector(const GalerkinSystem& sys, const ProjectedForcing& f, double t) {
  Vector b = Vector::Zero(sys.m() + sys.n());
  if (f.fluid.size() != 0) b += f.fluid_scale(t) * f.fluid;
  if (f.plate.size() != 0) b.tail(sys.n()) += f.plate_scale(t) * f.plate;
  return b;
}

inline void require_beam_model(const GalerkinSystem& sys, const forces::ForceModel& model) {
  if (model.dimension() == 2) throw std::invalid_argument("the coupled system needs a beam force model, not " + model.name());
  if (model.dimension() == 1 && model.plate()->size() != sys.plate().size()) {
    throw std::invalid_argument("force model grid does not match the elastic face");
  }
}

// (F(u), ξ_k) for the current deflection
inline Vector projected_force(const GalerkinSystem& sys, const forces::ForceModel& model, const Vector& u) {
  if (model.is_none()) return Vector::Zero(sys.n());
  return sys.plate().spacing() * (sys.plate_basis().transpose() * forces::force_values(model, u));
}

// Matrix L with Ẋ = L X for the linear unforced system.
inline Matrix linear_operator(const GalerkinSystem& sys) {
  const int m = sys.m(), n = sys.n(), k = m + n;
  Matrix j = Matrix::Zero(k, m + 2 * n);
  j.leftCols(m) = -sys.dissipation().leftCols(m);
  j.rightCols(n) = -sys.dissipation().rightCols(n);
  j.block(m, m, n, n) -= sys.stiffness();
  const Matrix t = k > 0 ? sys.solve_mass(j) : Matrix(0, m + 2 * n);
  Matrix l = Matrix::Zero(m + 2 * n, m + 2 * n);
  l.topRows(m) = t.topRows(m);
  l.block(m, m + n, n, n) = Matrix::Identity(n, n);
  l.bottomRows(n) = t.bottomRows(n);
  return l;
}

// Ẋ from the full system at state x
inline Vector rhs(const Vector& x, double t, double offset, const GalerkinSystem& sys, const ProjectedForcing& forcing,
                  const forces::ForceModel& model) {
  const int m = sys.m(), n = sys.n();
  Vector y(m + n);
  y << x.head(m), x.tail(n);
  const Vector beta = x.segment(m, n);
  Vector b = -sys.dissipation() * y + load_vector(sys, forcing, t);
  b.tail(n) -= sys.stiffness() * beta;
  if (!model.is_none()) {
    b.tail(n) -= projected_force(sys, model, sys.plate_basis() * beta + offset * sys.projector().complement());
  }
  const Vector yd = m + n > 0 ? Vector(sys.solve_mass(b)) : Vector(0);
  Vector xd(m + 2 * n);
  xd << yd.head(m), x.tail(n), yd.tail(n);
  return xd;
}

struct Rates {
  Vector alpha;    // α̇
  Vector beta;     // β̇
  Vector betadot;  // β̈
};

inline Rates rhs(const State& s, const GalerkinSystem& sys, const ProjectedForcing& forcing, const forces::ForceModel& model) {
  require_beam_model(sys, model);
  const Vector xd = rhs(pack(s), s.t, s.offset, sys, forcing, model);
  return {xd.head(sys.m()), xd.segment(sys.m(), sys.n()), xd.tail(sys.n())};
}

struct InitialData {
  VelocityField v0;
  PlateFunction u0;
  PlateFunction u1;
};

inline State project_initial(const InitialData& d, const GalerkinSystem& sys) {
  const Grid& g = sys.grid();
  const mesh::PlateGrid& p = sys.plate();
  const int nx = g.nx();
  const Vector v0 = d.v0.values.size() ? d.v0.values : Vector::Zero(g.num_faces());
  const Vector u0 = d.u0.values.size() ? d.u0.values : Vector::Zero(nx);
  const Vector u1 = d.u1.values.size() ? d.u1.values : Vector::Zero(nx);
  if (v0.size() != g.num_faces() || u0.size() != nx || u1.size() != nx) {
    throw std::invalid_argument("initial data does not match the grid");
  }
  const double scale = 1.0 + v0.cwiseAbs().maxCoeff() + u1.cwiseAbs().maxCoeff();
  if (modal::divergence_norm({v0}, g) > trace_tol * scale / std::min(g.hx(), g.hz())) {
    throw std::invalid_argument("initial velocity is not solenoidal");
  }
  for (int f : g.wall_faces()) {
    if (std::abs(v0[f]) > trace_tol * scale) throw std::invalid_argument("initial velocity does not vanish on the rigid walls");
  }
  for (int i = 0; i < nx; ++i) {
    if (std::abs(v0[g.elastic_faces()[i]] - u1[i]) > trace_tol * scale) {
      throw std::invalid_argument("initial velocity trace does not match the plate velocity on the elastic face");
    }
  }
  if (std::abs(u1.mean()) > trace_tol * scale) throw std::invalid_argument("initial plate velocity must have zero mean");
  State s = zero_state(sys);
  const PlateFunction u1z{u1.array() - u1.mean()};
  const Vector rest = v0 - modal::lift_N0(u1z, *sys.basis().fluid).values;
  const Vector wr = g.face_weights().cwiseProduct(rest);
  for (int i = 0; i < sys.m(); ++i) s.alpha[i] = sys.basis().stokes[i].field.values.dot(wr);
  const PlateFunction pu0 = sys.projector().apply({u0});
  s.beta = p.spacing() * (sys.plate_basis().transpose() * pu0.values);
  s.betadot = p.spacing() * (sys.plate_basis().transpose() * u1);
  s.offset = sys.projector().offset_coefficient({u0});
  return s;
}

struct Fields {
  VelocityField v;
  PlateFunction u;
  PlateFunction ut;
};

inline Fields reconstruct(const State& s, const GalerkinSystem& sys) {
  Fields f;
  const Vector y = sys.velocity_coefficients(s);
  f.v.values = sys.fluid_basis() * y;
  f.ut.values = sys.plate_basis() * s.betadot;
  f.u.values = sys.deflection(s);
  // exact trace: ψ vanish on the elastic face, φ_j carries ξ_j
  const Grid& g = sys.grid();
  for (int i = 0; i < g.nx(); ++i) f.v.values[g.elastic_faces()[i]] = f.ut.values[i];
  return f;
}

}  // namespace plateflow::galerkin
