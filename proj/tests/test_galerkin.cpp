#include "plateflow/galerkin.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace plateflow;
using namespace plateflow::galerkin;

namespace {

std::shared_ptr<const modal::ModalBasis> basis(int n_grid, int m, int n) {
  return std::make_shared<const modal::ModalBasis>(modal::compute_modal_basis(Grid({1.0, 1.0, n_grid, n_grid}), m, n));
}

Vector random(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> d;
  Vector v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

double min_eig(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace

TEST(Assemble, SingleFluidMode) {
  const GalerkinSystem sys(basis(12, 1, 0), 1.0);
  ASSERT_EQ(sys.mass().rows(), 1);
  EXPECT_NEAR(sys.mass()(0, 0), 1.0, 1e-10);
}

TEST(Assemble, SinglePlateMode) {
  auto b = basis(12, 0, 1);
  const GalerkinSystem sys(b, 1.0);
  const double phi2 = mesh::inner_product(b->lifted[0].phi, b->lifted[0].phi, b->fluid->grid());
  ASSERT_EQ(sys.mass().rows(), 1);
  EXPECT_NEAR(sys.mass()(0, 0), phi2 + 1.0, 1e-10);
  EXPECT_GT(sys.mass()(0, 0), 1.0);
}

TEST(Assemble, DirectGramOracle) {
  auto b = basis(16, 1, 1);
  const GalerkinSystem sys(b, 0.7);
  const Grid& g = b->fluid->grid();
  const auto& psi = b->stokes[0].field;
  const auto& phi = b->lifted[0].phi;
  Matrix m(2, 2);
  m(0, 0) = mesh::inner_product(psi, psi, g);
  m(0, 1) = m(1, 0) = mesh::inner_product(psi, phi, g);
  m(1, 1) = mesh::inner_product(phi, phi, g) + mesh::inner_product(b->plate_modes[0].xi, b->plate_modes[0].xi, g);
  EXPECT_LE((sys.mass() - m).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_GT(min_eig(sys.mass()), 0.0);
  // dissipation block ν(∇ψ,∇ψ) = ν μ
  EXPECT_NEAR(sys.dissipation()(0, 0), 0.7 * b->stokes[0].mu, 1e-9 * b->stokes[0].mu);
  EXPECT_NEAR(sys.stiffness()(0, 0), b->plate_modes[0].kappa, 1e-9 * b->plate_modes[0].kappa);
}

TEST(Assemble, Invariants) {
  const GalerkinSystem sys(basis(16, 6, 4), 1.0);
  EXPECT_LE((sys.mass() - sys.mass().transpose()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_GT(sys.mass_min_eigenvalue(), 0.0);
  EXPECT_GE(min_eig(sys.dissipation()), -1e-10 * sys.dissipation().norm());
  EXPECT_THROW(GalerkinSystem(basis(8, 1, 1), -1.0), std::invalid_argument);
}

class SmallSystem : public ::testing::Test {
 protected:
  SmallSystem() : sys(basis(12, 4, 3), 0.8) {}
  GalerkinSystem sys;
};

TEST_F(SmallSystem, ProjectInitialExamples) {
  const State z = project_initial({}, sys);
  EXPECT_EQ(pack(z).cwiseAbs().maxCoeff(), 0.0);
  const auto& b = sys.basis();
  const State s1 = project_initial({{}, b.plate_modes[0].xi, {}}, sys);
  EXPECT_NEAR(s1.beta[0], 1.0, 1e-12);
  EXPECT_LE(s1.beta.tail(2).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE(s1.alpha.cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_NEAR(s1.offset, 0.0, 1e-12);
  const State s2 = project_initial({b.lifted[0].phi, {}, b.plate_modes[0].xi}, sys);
  EXPECT_LE(s2.alpha.cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(s2.betadot[0], 1.0, 1e-12);
  EXPECT_LE(s2.betadot.tail(2).cwiseAbs().maxCoeff(), 1e-12);
}

TEST_F(SmallSystem, ProjectInitialRejectsIncompatibleData) {
  const auto& b = sys.basis();
  // plate velocity without matching fluid trace
  EXPECT_THROW(project_initial({{}, {}, b.plate_modes[0].xi}, sys), std::invalid_argument);
  VelocityField v = b.lifted[0].phi;
  v.values[sys.grid().elastic_faces()[3]] += 1e-3;
  EXPECT_THROW(project_initial({v, {}, b.plate_modes[0].xi}, sys), std::invalid_argument);
}

TEST_F(SmallSystem, OffsetCarried) {
  const PlateFunction w0{sys.projector().complement()};
  const State s = project_initial({{}, w0, {}}, sys);
  EXPECT_NEAR(s.offset, 1.0, 1e-12);
  EXPECT_LE(s.beta.cwiseAbs().maxCoeff(), 1e-10);
  const Fields f = reconstruct(s, sys);
  EXPECT_LE((f.u.values - w0.values).cwiseAbs().maxCoeff(), 1e-10);
}

TEST_F(SmallSystem, ReconstructTrace) {
  std::mt19937_64 rng(4);
  for (int k = 0; k < 5; ++k) {
    State s = zero_state(sys);
    s.alpha = random(sys.m(), rng);
    s.beta = random(sys.n(), rng);
    s.betadot = random(sys.n(), rng);
    const Fields f = reconstruct(s, sys);
    const Grid& g = sys.grid();
    for (int i = 0; i < g.nx(); ++i) EXPECT_EQ(f.v.values[g.elastic_faces()[i]], f.ut.values[i]);
    EXPECT_LE(std::abs(f.ut.values.mean()), 1e-14);
    EXPECT_LE(modal::divergence_norm(f.v, g), 1e-9);
  }
  State s = zero_state(sys);
  s.betadot[0] = 1.0;
  const Fields f = reconstruct(s, sys);
  EXPECT_LE((f.v.values - sys.basis().lifted[0].phi.values).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LE((f.ut.values - sys.basis().plate_modes[0].xi.values).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_EQ(pack(zero_state(sys)).size(), sys.dim());
}

TEST_F(SmallSystem, RhsExamples) {
  const ProjectedForcing none;
  const auto model = forces::ForceModel::none();
  const Rates z = rhs(zero_state(sys), sys, none, model);
  EXPECT_EQ(z.alpha.cwiseAbs().maxCoeff() + z.betadot.cwiseAbs().maxCoeff(), 0.0);

  const GalerkinSystem fluid(basis(12, 1, 0), 0.8);
  State a = zero_state(fluid);
  a.alpha[0] = 1.0;
  const double mu = fluid.basis().stokes[0].mu;
  EXPECT_NEAR(rhs(a, fluid, none, model).alpha[0], -0.8 * mu, 1e-9 * mu);

  auto pb = basis(12, 0, 1);
  const GalerkinSystem plate(pb, 0.8);
  State p = zero_state(plate);
  p.beta[0] = 1.0;
  const double phi2 = mesh::inner_product(pb->lifted[0].phi, pb->lifted[0].phi, pb->fluid->grid());
  const double expected = -pb->plate_modes[0].kappa / (1.0 + phi2);
  EXPECT_NEAR(rhs(p, plate, none, model).betadot[0], expected, 1e-9 * std::abs(expected));
}

TEST_F(SmallSystem, SemidiscreteEnergyIdentity) {
  std::mt19937_64 rng(8);
  const ProjectedForcing none;
  const auto model = forces::ForceModel::none();
  for (int k = 0; k < 10; ++k) {
    State s = zero_state(sys);
    s.alpha = random(sys.m(), rng);
    s.beta = random(sys.n(), rng);
    s.betadot = random(sys.n(), rng);
    const Rates r = rhs(s, sys, none, model);
    const Vector y = sys.velocity_coefficients(s);
    Vector yd(sys.m() + sys.n());
    yd << r.alpha, r.betadot;
    const double de0 = y.dot(sys.mass() * yd) + s.beta.dot(sys.stiffness() * r.beta);
    // ν‖∇v‖² from the reconstructed field
    const Fields f = reconstruct(s, sys);
    const double diss = sys.nu() * f.v.values.dot(sys.grid().dirichlet_form() * f.v.values);
    EXPECT_NEAR(de0, -diss, 1e-10 * (1.0 + diss));
    // mean preservation
    EXPECT_LE(std::abs(sys.plate().mean(sys.plate_basis() * r.beta)), 1e-14);
  }
}

TEST_F(SmallSystem, ForcingProjection) {
  const Grid& g = sys.grid();
  Forcing f;
  f.fluid = sys.basis().stokes[1].field;
  const ProjectedForcing p = project_forcing(sys, f);
  EXPECT_NEAR(p.fluid[1], 1.0, 1e-10);
  EXPECT_NEAR(p.fluid[0], 0.0, 1e-10);
  Forcing q;
  q.plate = sys.basis().plate_modes[2].xi;
  q.plate_time = [](double t) { return 2.0 * t; };
  const ProjectedForcing pq = project_forcing(sys, q);
  const Vector l = load_vector(sys, pq, 0.5);
  EXPECT_NEAR(l[sys.m() + 2], 1.0, 1e-12);
  EXPECT_THROW(project_forcing(sys, Forcing{mesh::VelocityField{Vector::Zero(3)}, {}, {}, {}}), std::invalid_argument);
  (void)g;
}

TEST_F(SmallSystem, LinearOperatorMatchesRhs) {
  const Matrix l = linear_operator(sys);
  std::mt19937_64 rng(12);
  for (int k = 0; k < 5; ++k) {
    const Vector x = random(sys.dim(), rng);
    const Vector r = rhs(x, 0.0, 0.0, sys, {}, forces::ForceModel::none());
    EXPECT_LE((l * x - r).cwiseAbs().maxCoeff(), 1e-10 * (1 + r.cwiseAbs().maxCoeff()));
  }
}

TEST_F(SmallSystem, RejectsPlateModel) {
  auto g2 = std::make_shared<const mesh::PlateGrid2D>(8, 1.0);
  const auto vk = forces::ForceModel::von_karman({}, g2);
  EXPECT_THROW(rhs(zero_state(sys), sys, {}, vk), std::invalid_argument);
}
