#include "plateflow/dynamics.hpp"

#include <gtest/gtest.h>

#include <unsupported/Eigen/MatrixFunctions>

using namespace plateflow;
using namespace plateflow::dynamics;

namespace {

std::shared_ptr<const modal::ModalBasis> basis(int n_grid, int m, int n) {
  return std::make_shared<const modal::ModalBasis>(modal::compute_modal_basis(mesh::Grid({1.0, 1.0, n_grid, n_grid}), m, n));
}

class Dyn : public ::testing::Test {
 protected:
  Dyn() : sys(basis(12, 4, 3), 1.0) {}
  GalerkinSystem sys;
  forces::ForceModel berger() const { return forces::ForceModel::berger({1.0, 2.0, {}}, sys.basis().plate); }
};

}  // namespace

TEST_F(Dyn, ZeroStaysZero) {
  const Integrator integ(sys, {}, forces::ForceModel::none(), 1e-3);
  const State s = integ.step(galerkin::zero_state(sys));
  EXPECT_EQ(galerkin::pack(s).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_NEAR(s.t, 1e-3, 1e-15);
}

TEST_F(Dyn, LinearStepMatchesCayleyOracle) {
  const double dt = 1e-2;
  const Integrator integ(sys, {}, forces::ForceModel::none(), dt);
  std::mt19937_64 rng(3);
  const State s = random_state(sys, rng);
  const Matrix l = galerkin::linear_operator(sys);
  const int d = sys.dim();
  const Vector expect = (Matrix::Identity(d, d) - 0.5 * dt * l).lu().solve((Matrix::Identity(d, d) + 0.5 * dt * l) * galerkin::pack(s));
  EXPECT_LE((galerkin::pack(integ.step(s)) - expect).norm(), 1e-12 * expect.norm());
}

TEST_F(Dyn, SecondOrderAgainstExponential) {
  const Matrix l = galerkin::linear_operator(sys);
  std::mt19937_64 rng(5);
  const State s = random_state(sys, rng);
  const Vector exact = (l * 0.2).exp() * galerkin::pack(s);
  double prev = 0.0;
  for (double dt : {2e-3, 1e-3, 5e-4}) {
    const Trajectory tr = simulate(s, 0.2, Integrator(sys, {}, forces::ForceModel::none(), dt), {1000000});
    const double err = (galerkin::pack(tr.samples.back().state) - exact).norm();
    if (prev > 0.0) EXPECT_NEAR(prev / err, 4.0, 0.3);
    prev = err;
  }
}

TEST_F(Dyn, LinearEnergyBalanceExact) {
  std::mt19937_64 rng(6);
  const Trajectory tr = simulate(random_state(sys, rng), 1.0, Integrator(sys, {}, forces::ForceModel::none(), 1e-3), {50});
  EXPECT_LE(energy_balance_residual(tr), 1e-12);
  for (std::size_t k = 1; k < tr.samples.size(); ++k) EXPECT_LE(tr.samples[k].energy.E0, tr.samples[k - 1].energy.E0 + 1e-12);
  EXPECT_LE(tr.max_mean_drift, 1e-12);
}

TEST_F(Dyn, BergerBalanceSecondOrder) {
  std::mt19937_64 rng(7);
  const State s = random_state(sys, rng);
  const double r1 = energy_balance_residual(simulate(s, 1.0, Integrator(sys, {}, berger(), 2e-3), {1}));
  const double r2 = energy_balance_residual(simulate(s, 1.0, Integrator(sys, {}, berger(), 1e-3), {1}));
  EXPECT_LE(r2, 1e-5);
  EXPECT_GT(r1 / r2, 3.4);
  EXPECT_LT(r1 / r2, 4.6);
}

TEST_F(Dyn, EstarNonincreasingWithConstantLoad) {
  galerkin::Forcing f;
  f.plate = mesh::PlateFunction{Vector::Constant(sys.plate().size(), 3.0)};
  f.fluid = sys.basis().stokes[0].field;
  const Integrator integ(sys, galerkin::project_forcing(sys, f), berger(), 1e-3);
  std::mt19937_64 rng(9);
  const Trajectory tr = simulate(random_state(sys, rng), 2.0, integ, {10});
  for (std::size_t k = 1; k < tr.samples.size(); ++k) {
    const double a = tr.samples[k - 1].energy.Estar, b = tr.samples[k].energy.Estar;
    EXPECT_LE(b, a + 1e-10 * (std::abs(a) + 1.0));
  }
  EXPECT_LE(tr.max_mean_drift, 1e-10);
}

TEST_F(Dyn, FixedPointFailureReported) {
  const auto stiff = forces::ForceModel::berger({1e8, 0.0, {}}, sys.basis().plate);
  const Integrator integ(sys, {}, stiff, 1.0);
  std::mt19937_64 rng(1);
  EXPECT_THROW(integ.step(random_state(sys, rng, 10.0)), std::runtime_error);
  EXPECT_THROW(Integrator(sys, {}, forces::ForceModel::none(), 0.0), std::invalid_argument);
}

TEST_F(Dyn, LyapunovScan) {
  const LyapunovScan scan = lyapunov_scan(sys, 100, 11);
  ASSERT_TRUE(scan.found);
  EXPECT_GE(scan.a0, 0.5);
  EXPECT_LE(scan.a1, 1.5);
  std::mt19937_64 rng(12);
  const Trajectory tr = simulate(random_state(sys, rng), 1.0, Integrator(sys, {}, forces::ForceModel::none(), 1e-3), {1});
  double prev = lyapunov_V(tr.samples[0].state, scan.eps, sys);
  for (const auto& s : tr.samples) {
    const double v = lyapunov_V(s.state, scan.eps, sys);
    EXPECT_LE(v, prev * (1.0 + 1e-12) + 1e-300);
    prev = v;
  }
  EXPECT_NEAR(lyapunov_V(tr.samples[3].state, 0.0, sys), tr.samples[3].energy.E0, 1e-14);
}

TEST(DecayFit, RecoversRate) {
  std::vector<double> t, q;
  for (int k = 0; k <= 100; ++k) {
    t.push_back(0.1 * k);
    q.push_back(3.0 * std::exp(-1.7 * t.back()));
  }
  const DecayFit f = fit_decay_rate(t, q);
  ASSERT_TRUE(f.ok);
  EXPECT_NEAR(f.gamma, 1.7, 1e-10);
  q[60] = 0.0;
  EXPECT_FALSE(fit_decay_rate(t, q).ok);
}

TEST_F(Dyn, ContinuousDependenceLinear) {
  std::mt19937_64 rng(13);
  const State s = random_state(sys, rng);
  const State w = random_state(sys, rng);
  const DependenceReport r = continuous_dependence_probe(s, w, 1e-3, 0.5, Integrator(sys, {}, forces::ForceModel::none(), 1e-3));
  EXPECT_NEAR(r.factor, 2.0, 1e-6);
  const DependenceReport z = continuous_dependence_probe(s, w, 0.0, 0.1, Integrator(sys, {}, berger(), 1e-3));
  EXPECT_EQ(z.sup_delta, 0.0);
}

TEST_F(Dyn, QuasiStabilityIdenticalAndPair) {
  const Integrator integ(sys, {}, berger(), 1e-3);
  std::mt19937_64 rng(14);
  const State a = random_state(sys, rng), b = random_state(sys, rng);
  const Trajectory ta = simulate(a, 2.0, integ, {10});
  const QuasiStabilityReport same = quasi_stability_probe(ta, ta, sys, 0.5, 1e4);
  EXPECT_TRUE(same.pass);
  EXPECT_EQ(same.fitted_M, 0.0);
  const QuasiStabilityReport pair = quasi_stability_probe(ta, simulate(b, 2.0, integ, {10}), sys, 0.5, 1e4);
  EXPECT_TRUE(pair.pass);
  EXPECT_GE(pair.fitted_M, 1.0 - 1e-9);  // equality at t = 0
}

TEST_F(Dyn, RegularityRequiresLongRun) {
  std::mt19937_64 rng(15);
  const Trajectory tr = simulate(random_state(sys, rng), 1.0, Integrator(sys, {}, berger(), 1e-2), {1});
  EXPECT_THROW(attractor_regularity_probe(tr, sys), std::invalid_argument);
  const RegularityReport r = attractor_regularity_probe(tr, sys, 0.5);
  EXPECT_TRUE(r.finite);
}
