#pragma once

#include "plateflow/dynamics.hpp"

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include <complex>
#include <random>

namespace plateflow::spectrum {

using galerkin::GalerkinSystem;
using mesh::Grid;

// Ẋ = −A X on X = (α, β, β̇)
struct DiscreteGenerator {
  Matrix A;
  int m = 0;
  int n = 0;
};

inline DiscreteGenerator assemble_generator(const GalerkinSystem& sys) {
  return {-galerkin::linear_operator(sys), sys.m(), sys.n()};
}

inline Eigen::VectorXcd eigenvalues(const DiscreteGenerator& gen) {
  if (gen.A.rows() == 0) return Eigen::VectorXcd(0);
  Eigen::EigenSolver<Matrix> es(-gen.A, false);
  if (es.info() != Eigen::Success) throw std::runtime_error("eigensolver failed on the generator");
  return es.eigenvalues();
}

// max Re λ(−A)
inline double spectral_abscissa(const DiscreteGenerator& gen) {
  const Eigen::VectorXcd ev = eigenvalues(gen);
  if (ev.size() == 0) throw std::invalid_argument("empty generator");
  double a = -std::numeric_limits<double>::infinity();
  for (const auto& z : ev) a = std::max(a, z.real());
  return a;
}

// ‖R e^{−TA} R⁻¹‖₂ with RᵀR the energy matrix
inline double energy_norm_contraction(const DiscreteGenerator& gen, const GalerkinSystem& sys, double T) {
  const Matrix q = dynamics::energy_matrix(sys);
  const Eigen::LLT<Matrix> llt(q);
  if (llt.info() != Eigen::Success) throw std::runtime_error("energy matrix is not positive definite");
  const Matrix r = llt.matrixU();
  const Matrix e = (-T * gen.A).exp();
  const Matrix rinv = r.triangularView<Eigen::Upper>().solve(Matrix::Identity(r.rows(), r.cols()));
  Eigen::JacobiSVD<Matrix> svd(r * e * rinv);
  return svd.singularValues()(0);
}

// Symmetric part of A in the energy inner product, QA + AᵀQ, whose
// quadratic form is 2ν‖∇v‖².
inline Matrix energy_dissipation_form(const DiscreteGenerator& gen, const GalerkinSystem& sys) {
  const Matrix q = dynamics::energy_matrix(sys);
  const Matrix s = q * gen.A;
  return 0.5 * (s + s.transpose());
}

// max deviation, in the energy norm, of the midpoint trajectory from
// exp(−tA)X0 over the sample times
inline double semigroup_consistency(const DiscreteGenerator& gen, const GalerkinSystem& sys, const Vector& x0, double T,
                                    double dt, int stride = 1) {
  if (T == 0.0) return 0.0;
  const dynamics::Integrator integ(sys, {}, forces::ForceModel::none(), dt);
  const dynamics::Trajectory tr = dynamics::simulate(galerkin::unpack(x0, sys, 0.0, 0.0), T, integ, {stride});
  const Matrix q = dynamics::energy_matrix(sys);
  double dev = 0.0;
  for (const auto& s : tr.samples) {
    const Vector exact = (-s.state.t * gen.A).exp() * x0;
    const Vector d = galerkin::pack(s.state) - exact;
    dev = std::max(dev, std::sqrt(std::max(0.0, d.dot(q * d))));
  }
  return dev;
}

struct GammaReport {
  Matrix gamma;  // (∇q_i, φ_j) with q_i the harmonic lift of the trace of φ_i
  Matrix plate_gram;
  double asymmetry = 0.0;
  double min_eigenvalue = 0.0;
  double gram_deviation = 0.0;
  double max_residual = 0.0;
  bool pass = false;
};

inline GammaReport gamma_operator_checks(const modal::ModalBasis& basis) {
  const auto& ops = *basis.fluid;
  const Grid& g = ops.grid();
  const int n = static_cast<int>(basis.lifted.size());
  GammaReport r;
  r.gamma.resize(n, n);
  r.plate_gram.resize(n, n);
  for (int i = 0; i < n; ++i) {
    const modal::HarmonicLift h = modal::harmonic_lift_G(mesh::elastic_trace(basis.lifted[i].phi, g), ops);
    r.max_residual = std::max(r.max_residual, h.residual);
    for (int j = 0; j < n; ++j) {
      r.gamma(i, j) = mesh::inner_product(h.gradq, basis.lifted[j].phi, g);
      r.plate_gram(i, j) = basis.plate->inner(basis.plate_modes[i].xi.values, basis.plate_modes[j].xi.values);
    }
  }
  if (n == 0) {
    r.pass = true;
    return r;
  }
  r.asymmetry = (r.gamma - r.gamma.transpose()).cwiseAbs().maxCoeff();
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (r.gamma + r.gamma.transpose()), Eigen::EigenvaluesOnly);
  r.min_eigenvalue = es.eigenvalues().minCoeff();
  r.gram_deviation = (r.gamma - r.plate_gram).cwiseAbs().maxCoeff();
  r.pass = r.asymmetry <= 1e-7 && r.min_eigenvalue >= -1e-9 && r.gram_deviation <= 1e-7;
  return r;
}

}  // namespace plateflow::spectrum
