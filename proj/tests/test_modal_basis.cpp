#include "plateflow/modal_basis.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace plateflow;
using namespace plateflow::mesh;
using namespace plateflow::modal;

namespace {

Grid make(int nx, int nz) { return Grid({1.0, 1.0, nx, nz}); }

// Stokes eigenvalues from an explicit orthonormal basis of the discrete
// kernel of the divergence on interior faces.
Vector saddle_point_eigenvalues(const Grid& g) {
  const auto& faces = g.interior_faces();
  const int nf = static_cast<int>(faces.size());
  const Matrix d = Matrix(g.divergence());
  const Matrix a = Matrix(g.dirichlet_form());
  Matrix dint(g.num_cells(), nf), aint(nf, nf);
  Vector w(nf);
  for (int k = 0; k < nf; ++k) {
    dint.col(k) = d.col(faces[k]);
    w[k] = g.face_weights()[faces[k]];
    for (int l = 0; l < nf; ++l) aint(k, l) = a(faces[k], faces[l]);
  }
  Eigen::JacobiSVD<Matrix> svd(dint, Eigen::ComputeFullV);
  const int rank = static_cast<int>((svd.singularValues().array() > 1e-9 * svd.singularValues()[0]).count());
  const Matrix z = svd.matrixV().rightCols(nf - rank);
  const Matrix kz = z.transpose() * aint * z;
  const Matrix mz = z.transpose() * w.asDiagonal() * z;
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(kz, mz, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

// smallest root of cos(k) cosh(k) = 1 above 3, by bisection
double clamped_beam_root() {
  double lo = 4.0, hi = 5.0;
  auto f = [](double k) { return std::cos(k) * std::cosh(k) - 1.0; };
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (f(lo) * f(mid) <= 0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

double fluid_norm(const Vector& v, const Grid& g) { return std::sqrt(v.dot(g.face_weights().cwiseProduct(v))); }

}  // namespace

TEST(Stokes, MatchesSaddlePointOracle) {
  const Grid g = make(8, 8);
  const auto modes = solve_stokes_eigenmodes(g, 6);
  const Vector oracle = saddle_point_eigenvalues(g);
  for (int i = 0; i < 6; ++i) EXPECT_NEAR(modes[i].mu, oracle[i], 1e-8 * oracle[i]);
}

TEST(Stokes, FirstModeOn16) {
  const Grid g = make(16, 16);
  const FluidOperators ops(g);
  const auto modes = solve_stokes_eigenmodes(ops, 1);
  ASSERT_EQ(modes.size(), 1u);
  EXPECT_GT(modes[0].mu, 0.0);
  EXPECT_LE(modes[0].residual, 1e-8);
  // unit-square Stokes eigenvalue 52.3447
  EXPECT_NEAR(modes[0].mu, 52.3447, 0.05 * 52.3447);
}

TEST(Stokes, ModeInvariants) {
  const Grid g = make(12, 10);
  const FluidOperators ops(g);
  const auto modes = solve_stokes_eigenmodes(ops, 8);
  for (std::size_t i = 0; i < modes.size(); ++i) {
    EXPECT_LE(divergence_norm(modes[i].field, g), 1e-10);
    for (int f : g.wall_faces()) EXPECT_EQ(modes[i].field.values[f], 0.0);
    for (int f : g.elastic_faces()) EXPECT_EQ(modes[i].field.values[f], 0.0);
    EXPECT_NEAR(modes[i].pressure.values.mean(), 0.0, 1e-10);
    EXPECT_LE(modes[i].residual, eig_tol * modes[i].mu);
    if (i > 0) EXPECT_LE(modes[i - 1].mu, modes[i].mu);
    for (std::size_t j = 0; j < modes.size(); ++j) {
      EXPECT_NEAR(inner_product(modes[i].field, modes[j].field, g), i == j ? 1.0 : 0.0, 1e-10);
    }
  }
}

TEST(Stokes, TooManyModes) {
  const Grid g = make(4, 4);
  EXPECT_THROW(solve_stokes_eigenmodes(g, 10), std::invalid_argument);
  EXPECT_EQ(solve_stokes_eigenmodes(g, 9).size(), 9u);
}

TEST(Plate, ClampedCalibration) {
  const double k = clamped_beam_root();
  EXPECT_NEAR(k, 4.73004074, 1e-8);
  const Vector ev = clamped_beam_eigenvalues(PlateGrid(64, 1.0));
  EXPECT_NEAR(ev[0], std::pow(k, 4), 0.01 * std::pow(k, 4));
}

TEST(Plate, ModeInvariants) {
  const PlateGrid p(32, 1.0);
  const auto modes = solve_plate_eigenmodes(p, 8);
  for (std::size_t i = 0; i < modes.size(); ++i) {
    EXPECT_LE(std::abs(p.mean(modes[i].xi.values)), 1e-12);
    if (i > 0) EXPECT_LE(modes[i - 1].kappa, modes[i].kappa);
    for (std::size_t j = 0; j < modes.size(); ++j) {
      EXPECT_NEAR(p.inner(modes[i].xi.values, modes[j].xi.values), i == j ? 1.0 : 0.0, 1e-10);
      const double b = modes[i].xi.values.dot(p.bending() * modes[j].xi.values);
      EXPECT_NEAR(b, i == j ? modes[i].kappa : 0.0, 1e-8 * modes[i].kappa);
    }
  }
  // zero-mean constraint raises the lowest eigenvalue above the clamped one
  EXPECT_GT(modes[0].kappa, clamped_beam_eigenvalues(p)[0]);
  EXPECT_THROW(solve_plate_eigenmodes(p, 32), std::invalid_argument);
}

class LiftTest : public ::testing::Test {
 protected:
  LiftTest() : grid(make(16, 12)), ops(grid), plate(grid), modes(solve_plate_eigenmodes(plate, 6)) {}
  Grid grid;
  FluidOperators ops;
  PlateGrid plate;
  std::vector<PlateMode> modes;
};

TEST_F(LiftTest, ZeroAndLinearity) {
  EXPECT_EQ(lift_N0(PlateFunction{Vector::Zero(16)}, ops).values.cwiseAbs().maxCoeff(), 0.0);
  const Vector a = lift_N0(PlateFunction{2 * modes[0].xi.values - modes[1].xi.values}, ops).values;
  const Vector b = 2 * lift_N0(modes[0].xi, ops).values - lift_N0(modes[1].xi, ops).values;
  EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-10);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> d;
  const double s = d(rng), t = d(rng);
  const Vector c = lift_N0(PlateFunction{s * modes[2].xi.values + t * modes[3].xi.values}, ops).values -
                   s * lift_N0(modes[2].xi, ops).values - t * lift_N0(modes[3].xi, ops).values;
  EXPECT_LE(fluid_norm(c, grid), 1e-9 * (std::abs(s) + std::abs(t)));
}

TEST_F(LiftTest, TraceAndDivergence) {
  for (const auto& m : modes) {
    const VelocityField phi = lift_N0(m.xi, ops);
    const PlateFunction tr = elastic_trace(phi, grid);
    EXPECT_EQ((tr.values - m.xi.values).cwiseAbs().maxCoeff(), 0.0);
    for (int f : grid.wall_faces()) EXPECT_NEAR(phi.values[f], 0.0, 1e-14);
    EXPECT_LE(divergence_norm(phi, grid), 1e-10);
  }
}

TEST_F(LiftTest, IsStokesSolution) {
  const VelocityField phi = lift_N0(modes[0].xi, ops);
  const Vector r = grid.dirichlet_form() * phi.values;
  const ScalarField p{ops.recover_pressure(r)};
  const Vector lap = discrete_laplacian(phi, grid, {elastic_trace(phi, grid)}).values;
  const Vector grad = discrete_grad(p, grid).values;
  double res = 0.0, scale = 0.0;
  for (int f : grid.interior_faces()) {
    res = std::max(res, std::abs(-lap[f] + grad[f]));
    scale = std::max(scale, std::abs(lap[f]));
  }
  EXPECT_LE(res, 1e-8 * scale);
}

TEST_F(LiftTest, RejectsNonzeroMean) {
  EXPECT_THROW(lift_N0(PlateFunction{Vector::Ones(16)}, ops), std::invalid_argument);
}

TEST_F(LiftTest, OperatorNormIsFinite) {
  double worst = 0.0;
  for (const auto& m : modes) {
    const VelocityField phi = lift_N0(m.xi, ops);
    worst = std::max(worst, fluid_norm(phi.values, grid) / std::sqrt(plate.inner(m.xi.values, m.xi.values)));
  }
  EXPECT_TRUE(std::isfinite(worst));
  EXPECT_GT(worst, 0.0);
}

TEST_F(LiftTest, AdjointIdentity) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> d;
  VelocityField gf{Vector(grid.num_faces())};
  for (auto& x : gf.values) x = d(rng);
  const PlateFunction r = adjoint_N0(gf, ops);
  EXPECT_LE(std::abs(r.values.mean()), 1e-12);
  for (const auto& m : modes) {
    const double lhs = plate.inner(r.values, m.xi.values);
    const double rhs = inner_product(gf, lift_N0(m.xi, ops), grid);
    EXPECT_NEAR(lhs, rhs, 1e-9);
  }
  EXPECT_EQ(adjoint_N0(VelocityField{Vector::Zero(grid.num_faces())}, ops).values.cwiseAbs().maxCoeff(), 0.0);
}

TEST_F(LiftTest, Projector) {
  const PlateProjector proj(plate);
  const PlateFunction w0{proj.complement()};
  EXPECT_LE(proj.apply(w0).values.cwiseAbs().maxCoeff(), 1e-10 * w0.values.cwiseAbs().maxCoeff());
  // Δ²w0 = 1
  EXPECT_LE((beam_biharmonic(w0, plate).values.array() - 1.0).abs().maxCoeff(), 1e-8);
  const PlateFunction u{plate.sample([](double x) { return std::pow(x * (1 - x), 2) * (1 + 3 * x); })};
  const PlateFunction pu = project_phat(u, plate);
  EXPECT_LE((project_phat(pu, plate).values - pu.values).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE(std::abs(pu.values.mean()), 1e-12);
  const Vector rest = u.values - pu.values;
  EXPECT_NEAR(rest.dot(plate.bending() * pu.values), 0.0, 1e-9);
}

TEST_F(LiftTest, HarmonicLift) {
  const HarmonicLift zero = harmonic_lift_G(PlateFunction{Vector::Zero(16)}, ops);
  EXPECT_EQ(zero.q.values.cwiseAbs().maxCoeff(), 0.0);
  const HarmonicLift c = harmonic_lift_G(PlateFunction{Vector::Constant(16, 2.5)}, ops);
  EXPECT_LE(c.gradq.values.cwiseAbs().maxCoeff(), 1e-9);
  const HarmonicLift h = harmonic_lift_G(modes[1].xi, ops);
  EXPECT_LE(h.residual, 1e-8);
  // discrete harmonicity: div of the gradient vanishes cell by cell
  const Vector lap = discrete_div(h.gradq, grid).values;
  EXPECT_LE(lap.cwiseAbs().maxCoeff(), 1e-8 * (1.0 + h.gradq.values.cwiseAbs().maxCoeff() / grid.hx()));
}

TEST_F(LiftTest, GammaIdentity) {
  const int n = static_cast<int>(modes.size());
  Matrix gamma(n, n), gram(n, n);
  std::vector<VelocityField> phi;
  for (const auto& m : modes) phi.push_back(lift_N0(m.xi, ops));
  for (int i = 0; i < n; ++i) {
    const HarmonicLift h = harmonic_lift_G(elastic_trace(phi[i], grid), ops);
    for (int j = 0; j < n; ++j) {
      gamma(i, j) = inner_product(h.gradq, phi[j], grid);
      gram(i, j) = plate.inner(modes[i].xi.values, modes[j].xi.values);
    }
  }
  EXPECT_LE((gamma - gamma.transpose()).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LE((gamma - gram).cwiseAbs().maxCoeff(), 1e-8);
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (gamma + gamma.transpose()));
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-9);
}
