#pragma once

#include "plateflow/mesh.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <memory>
#include <sstream>

namespace plateflow::modal {

using mesh::Grid;
using mesh::PlateFunction;
using mesh::PlateGrid;
using mesh::ScalarField;
using mesh::VelocityField;

struct StokesMode {
  double mu = 0.0;
  VelocityField field;
  ScalarField pressure;
  double residual = 0.0;
};

struct PlateMode {
  double kappa = 0.0;
  PlateFunction xi;
};

struct LiftedMode {
  VelocityField phi;
  int source = 0;  // index into the plate mode list
};

inline constexpr double eig_tol = 1e-8;

namespace detail {

// Flip v so that its largest-magnitude entry (first one on ties) is positive.
inline void fix_sign(Eigen::Ref<Vector> v) {
  Eigen::Index k = 0;
  v.cwiseAbs().maxCoeff(&k);
  if (v[k] < 0) v = -v;
}

inline void zero_mean(Vector& v) { v.array() -= v.mean(); }

}  // namespace detail

// Discrete solenoidal calculus on a grid: every divergence-free field with
// zero normal flux through the walls is the discrete curl of a vertex
// stream function. Holds the factorizations reused by every solve.
class FluidOperators {
 public:
  explicit FluidOperators(Grid grid) : grid_(std::move(grid)) {
    const Grid& g = grid_;
    const int nx = g.nx(), nz = g.nz();
    Triplets t;
    for (int j = 0; j < nz; ++j) {
      for (int i = 0; i <= nx; ++i) {
        t.emplace_back(g.u_face(i, j), g.vertex(i, j + 1), 1.0 / g.hz());
        t.emplace_back(g.u_face(i, j), g.vertex(i, j), -1.0 / g.hz());
      }
    }
    for (int j = 0; j <= nz; ++j) {
      for (int i = 0; i < nx; ++i) {
        t.emplace_back(g.w_face(i, j), g.vertex(i + 1, j), -1.0 / g.hx());
        t.emplace_back(g.w_face(i, j), g.vertex(i, j), 1.0 / g.hx());
      }
    }
    curl_.resize(g.num_faces(), g.num_vertices());
    curl_.setFromTriplets(t.begin(), t.end());

    Triplets ti;
    int k = 0;
    for (int j = 1; j < nz; ++j) {
      for (int i = 1; i < nx; ++i) ti.emplace_back(g.vertex(i, j), k++, 1.0);
    }
    SparseMatrix inject(g.num_vertices(), k);
    inject.setFromTriplets(ti.begin(), ti.end());
    curl_int_ = curl_ * inject;

    const SparseMatrix& a = g.dirichlet_form();
    stiffness_ = SparseMatrix(curl_int_.transpose() * a * curl_int_);
    mass_ = SparseMatrix(curl_int_.transpose() * g.face_weights().asDiagonal() * curl_int_);
    stiffness_solver_.compute(stiffness_);
    if (stiffness_solver_.info() != Eigen::Success) throw std::runtime_error("stream-function stiffness factorization failed");

    // top-edge stream function from a normal trace: s(i+1) = s(i) - hx * trace(i)
    Triplets tt;
    for (int kk = 1; kk < nx; ++kk) {
      for (int i = 0; i < kk; ++i) tt.emplace_back(g.vertex(kk, nz), i, -g.hx());
    }
    trace_to_stream_.resize(g.num_vertices(), nx);
    trace_to_stream_.setFromTriplets(tt.begin(), tt.end());

    build_pressure_solver();
    build_harmonic_solver();
  }

  const Grid& grid() const { return grid_; }
  const SparseMatrix& curl() const { return curl_; }
  const SparseMatrix& interior_curl() const { return curl_int_; }
  const SparseMatrix& stream_stiffness() const { return stiffness_; }
  const SparseMatrix& stream_mass() const { return mass_; }
  const SparseMatrix& trace_to_stream() const { return trace_to_stream_; }

  Vector solve_stream(const Vector& rhs) const { return stiffness_solver_.solve(rhs); }

  // Zero-mean pressure p with grad p = -M^{-1} r on interior faces, in the
  // least-squares sense (exact when r is orthogonal to solenoidal fields).
  Vector recover_pressure(const Vector& r) const {
    Vector rint(int_faces_.size());
    for (std::size_t k = 0; k < int_faces_.size(); ++k) rint[k] = r[int_faces_[k]];
    Vector rhs = div_int_ * rint;
    rhs[0] = 0.0;
    Vector p = pressure_solver_.solve(rhs) / grid_.cell_weight();
    detail::zero_mean(p);
    return p;
  }

  // Discrete harmonic q: Neumann on the walls, q = r on the elastic face.
  Vector solve_harmonic(const Vector& trace) const {
    return harmonic_solver_.solve(harmonic_boundary_ * trace);
  }
  const SparseMatrix& harmonic_matrix() const { return harmonic_; }
  const SparseMatrix& harmonic_boundary() const { return harmonic_boundary_; }

 private:
  void build_pressure_solver() {
    const Grid& g = grid_;
    int_faces_ = g.interior_faces();
    std::vector<int> col(g.num_faces(), -1);
    for (std::size_t k = 0; k < int_faces_.size(); ++k) col[int_faces_[k]] = static_cast<int>(k);
    const SparseMatrix& d = g.divergence();
    Triplets t;
    for (int f = 0; f < d.outerSize(); ++f) {
      if (col[f] < 0) continue;
      for (SparseMatrix::InnerIterator it(d, f); it; ++it) t.emplace_back(it.row(), col[f], it.value());
    }
    div_int_.resize(g.num_cells(), static_cast<int>(int_faces_.size()));
    div_int_.setFromTriplets(t.begin(), t.end());
    SparseMatrix lap = div_int_ * SparseMatrix(div_int_.transpose());
    // pin cell 0
    for (int c = 0; c < lap.outerSize(); ++c) {
      for (SparseMatrix::InnerIterator it(lap, c); it; ++it) {
        if (it.row() == 0 || it.col() == 0) it.valueRef() = (it.row() == it.col()) ? 1.0 : 0.0;
      }
    }
    lap.prune(0.0);
    pressure_solver_.compute(lap);
    if (pressure_solver_.info() != Eigen::Success) throw std::runtime_error("pressure factorization failed");
  }

  void build_harmonic_solver() {
    const Grid& g = grid_;
    const int nx = g.nx(), nz = g.nz();
    Triplets t, tb;
    const double cx = g.hz() / g.hx(), cz = g.hx() / g.hz();
    for (int j = 0; j < nz; ++j) {
      for (int i = 0; i + 1 < nx; ++i) mesh::detail::add_difference(t, g.cell(i, j), g.cell(i + 1, j), cx);
    }
    for (int j = 0; j + 1 < nz; ++j) {
      for (int i = 0; i < nx; ++i) mesh::detail::add_difference(t, g.cell(i, j), g.cell(i, j + 1), cz);
    }
    for (int i = 0; i < nx; ++i) {
      t.emplace_back(g.cell(i, nz - 1), g.cell(i, nz - 1), 2.0 * cz);
      tb.emplace_back(g.cell(i, nz - 1), i, 2.0 * cz);
    }
    harmonic_.resize(g.num_cells(), g.num_cells());
    harmonic_.setFromTriplets(t.begin(), t.end());
    harmonic_boundary_.resize(g.num_cells(), nx);
    harmonic_boundary_.setFromTriplets(tb.begin(), tb.end());
    harmonic_solver_.compute(harmonic_);
    if (harmonic_solver_.info() != Eigen::Success) throw std::runtime_error("harmonic factorization failed");
  }

  Grid grid_;
  SparseMatrix curl_, curl_int_, stiffness_, mass_, trace_to_stream_;
  Eigen::SimplicialLDLT<SparseMatrix> stiffness_solver_;
  std::vector<int> int_faces_;
  SparseMatrix div_int_;
  Eigen::SimplicialLDLT<SparseMatrix> pressure_solver_;
  SparseMatrix harmonic_, harmonic_boundary_;
  Eigen::SimplicialLDLT<SparseMatrix> harmonic_solver_;
};

// max-norm of the divergence
inline double divergence_norm(const VelocityField& v, const Grid& g) {
  return mesh::discrete_div(v, g).values.cwiseAbs().maxCoeff();
}

inline double stokes_residual(const FluidOperators& ops, const VelocityField& psi, const ScalarField& p, double mu) {
  const Grid& g = ops.grid();
  const Vector lap = mesh::discrete_laplacian(psi, g, {}).values;
  const Vector grad = mesh::discrete_grad(p, g).values;
  double s = 0.0;
  for (int f : g.interior_faces()) {
    const double r = -lap[f] + grad[f] - mu * psi.values[f];
    s += g.face_weights()[f] * r * r;
  }
  return std::sqrt(s);
}

inline std::vector<StokesMode> solve_stokes_eigenmodes(const FluidOperators& ops, int m) {
  const Grid& g = ops.grid();
  const int dim = static_cast<int>(ops.stream_stiffness().rows());
  if (m < 0 || m > dim) {
    throw std::invalid_argument("requested " + std::to_string(m) + " Stokes modes but the solenoidal space has dimension " +
                                std::to_string(dim));
  }
  std::vector<StokesMode> out;
  if (m == 0) return out;
  const Matrix k = Matrix(ops.stream_stiffness());
  const Matrix b = Matrix(ops.stream_mass());
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(k, b);
  if (es.info() != Eigen::Success) throw std::runtime_error("Stokes eigensolver failed to converge");
  for (int i = 0; i < m; ++i) {
    Vector s = es.eigenvectors().col(i);
    StokesMode mode;
    mode.mu = es.eigenvalues()[i];
    mode.field.values = ops.interior_curl() * s;
    detail::fix_sign(mode.field.values);
    const Vector r = g.dirichlet_form() * mode.field.values - mode.mu * g.face_weights().cwiseProduct(mode.field.values);
    mode.pressure.values = ops.recover_pressure(r);
    mode.residual = stokes_residual(ops, mode.field, mode.pressure, mode.mu);
    if (!(mode.mu > 0.0) || !(mode.residual <= eig_tol * mode.mu)) {
      std::ostringstream os;
      os << "Stokes eigensolver failed: mode " << i << " has residual " << mode.residual << " for eigenvalue " << mode.mu;
      throw std::runtime_error(os.str());
    }
    out.push_back(std::move(mode));
  }
  return out;
}

inline std::vector<StokesMode> solve_stokes_eigenmodes(const Grid& g, int m) {
  return solve_stokes_eigenmodes(FluidOperators(g), m);
}

// Orthonormal basis of the zero-mean subspace of R^n.
inline Matrix zero_mean_basis(int n) {
  const Matrix ones = Matrix::Constant(n, 1, 1.0);
  Eigen::HouseholderQR<Matrix> qr(ones);
  const Matrix q = qr.householderQ() * Matrix::Identity(n, n);
  return q.rightCols(n - 1);
}

inline std::vector<PlateMode> solve_plate_eigenmodes(const PlateGrid& p, int n) {
  const int dim = p.size() - 1;
  if (n < 0 || n > dim) {
    throw std::invalid_argument("requested " + std::to_string(n) + " plate modes but the zero-mean space has dimension " +
                                std::to_string(dim));
  }
  std::vector<PlateMode> out;
  if (n == 0) return out;
  const Matrix q = zero_mean_basis(p.size());
  const Matrix reduced = q.transpose() * p.bending() * q / p.spacing();
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (reduced + reduced.transpose()));
  if (es.info() != Eigen::Success) throw std::runtime_error("plate eigensolver failed to converge");
  for (int j = 0; j < n; ++j) {
    PlateMode mode;
    mode.kappa = es.eigenvalues()[j];
    mode.xi.values = q * es.eigenvectors().col(j) / std::sqrt(p.spacing());
    mode.xi.values.array() -= mode.xi.values.mean();
    mode.xi.values /= std::sqrt(p.inner(mode.xi.values, mode.xi.values));
    detail::fix_sign(mode.xi.values);
    out.push_back(std::move(mode));
  }
  return out;
}

inline std::vector<PlateMode> solve_plate_eigenmodes(const Grid& g, int n) {
  return solve_plate_eigenmodes(PlateGrid(g), n);
}

// Unconstrained clamped spectrum, W^{-1} B.
inline Vector clamped_beam_eigenvalues(const PlateGrid& p) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(p.bending() / p.spacing(), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

inline void require_zero_mean(const PlateFunction& psi, const Grid& g) {
  if (psi.values.size() != g.nx()) throw std::invalid_argument("plate function does not match grid");
  const double scale = 1.0 + psi.values.cwiseAbs().maxCoeff();
  if (std::abs(psi.values.mean()) > 1e-10 * scale) {
    throw std::invalid_argument("lift_N0 requires a zero-mean plate function (mean " + std::to_string(psi.values.mean()) + ")");
  }
}

// Stokes extension of the normal trace psi on the elastic face with zero
// data on the walls and no volume force.
inline VelocityField lift_N0(const PlateFunction& psi, const FluidOperators& ops) {
  const Grid& g = ops.grid();
  require_zero_mean(psi, g);
  const Vector sb = ops.trace_to_stream() * psi.values;
  const Vector vb = ops.curl() * sb;
  const Vector rhs = -(ops.interior_curl().transpose() * (g.dirichlet_form() * vb));
  VelocityField v{vb + ops.interior_curl() * ops.solve_stream(rhs)};
  for (int i = 0; i < g.nx(); ++i) v.values[g.elastic_faces()[i]] = psi.values[i];
  return v;
}

// Zero-mean r with (r, b)_plate = (gf, N0 b)_fluid for every zero-mean b.
inline PlateFunction adjoint_N0(const VelocityField& gf, const FluidOperators& ops) {
  const Grid& g = ops.grid();
  mesh::check_conforming(gf, g);
  const Vector w = g.face_weights().cwiseProduct(gf.values);
  const Vector y = ops.solve_stream(ops.interior_curl().transpose() * w);
  const Vector back = ops.curl().transpose() * (w - g.dirichlet_form() * (ops.interior_curl() * y));
  PlateFunction r{ops.trace_to_stream().transpose() * back};
  r.values /= g.hx();
  detail::zero_mean(r.values);
  return r;
}

// Projector onto zero-mean deflections, orthogonal in (Δ., Δ.).
class PlateProjector {
 public:
  explicit PlateProjector(const PlateGrid& p) : h_(p.spacing()) {
    complement_ = p.bending().ldlt().solve(Vector::Constant(p.size(), p.spacing()));
    complement_mean_ = complement_.sum();
  }

  // w0 with Δ²w0 = 1, clamped
  const Vector& complement() const { return complement_; }

  PlateFunction apply(const PlateFunction& u) const {
    return {u.values - (u.values.sum() / complement_mean_) * complement_};
  }

  // coefficient c with (I - P)u = c w0
  double offset_coefficient(const PlateFunction& u) const { return u.values.sum() / complement_mean_; }

 private:
  double h_;
  Vector complement_;
  double complement_mean_ = 0.0;
};

inline PlateFunction project_phat(const PlateFunction& u, const PlateGrid& p) {
  mesh::check_conforming(u, p);
  return PlateProjector(p).apply(u);
}

inline PlateFunction project_phat(const PlateFunction& u, const Grid& g) { return project_phat(u, PlateGrid(g)); }

struct HarmonicLift {
  ScalarField q;
  VelocityField gradq;
  double residual = 0.0;
};

inline HarmonicLift harmonic_lift_G(const PlateFunction& r, const FluidOperators& ops) {
  const Grid& g = ops.grid();
  if (r.values.size() != g.nx()) throw std::invalid_argument("plate function does not match grid");
  HarmonicLift out;
  out.q.values = ops.solve_harmonic(r.values);
  const Vector res = ops.harmonic_matrix() * out.q.values - ops.harmonic_boundary() * r.values;
  out.residual = res.cwiseAbs().maxCoeff() / g.cell_weight();
  out.gradq = mesh::discrete_grad(out.q, g);
  for (int i = 0; i < g.nx(); ++i) {
    out.gradq.values[g.elastic_faces()[i]] = (r.values[i] - out.q.values[g.cell(i, g.nz() - 1)]) / (0.5 * g.hz());
  }
  return out;
}

// Everything the Galerkin assembly needs, computed once per (grid, m, n).
struct ModalBasis {
  std::shared_ptr<const FluidOperators> fluid;
  std::shared_ptr<const PlateGrid> plate;
  std::vector<StokesMode> stokes;
  std::vector<PlateMode> plate_modes;
  std::vector<LiftedMode> lifted;
};

inline std::vector<LiftedMode> lift_modes(const std::vector<PlateMode>& modes, const FluidOperators& ops) {
  std::vector<LiftedMode> out;
  for (std::size_t j = 0; j < modes.size(); ++j) out.push_back({lift_N0(modes[j].xi, ops), static_cast<int>(j)});
  return out;
}

inline ModalBasis compute_modal_basis(const Grid& g, int m, int n) {
  ModalBasis b;
  b.fluid = std::make_shared<const FluidOperators>(g);
  b.plate = std::make_shared<const PlateGrid>(g);
  b.stokes = solve_stokes_eigenmodes(*b.fluid, m);
  b.plate_modes = solve_plate_eigenmodes(*b.plate, n);
  b.lifted = lift_modes(b.plate_modes, *b.fluid);
  return b;
}

}  // namespace plateflow::modal
