#include "plateflow/plate_forces.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace plateflow;
using namespace plateflow::forces;

namespace {

constexpr double pi = std::numbers::pi;

std::shared_ptr<const PlateGrid> beam(int n = 32) { return std::make_shared<const PlateGrid>(n, 1.0); }
std::shared_ptr<const PlateGrid2D> square(int n = 16) { return std::make_shared<const PlateGrid2D>(n, 1.0); }

Vector smooth_beam(const PlateGrid& p, double a = 1.0) {
  return p.sample([&](double x) { return a * std::pow(std::sin(pi * x), 2) * (1 + 0.5 * x); });
}

Vector clamped_2d(const PlateGrid2D& g, int kx, int ky, double a = 1.0) {
  return g.sample([&](double x, double y) {
    return a * std::pow(std::sin(pi * x) * std::sin(pi * y), 2) * std::cos(kx * x) * (1 + 0.3 * std::sin(ky * y));
  });
}

ForceModel von_karman(int n = 16) {
  auto g = square(n);
  VonKarman vk;
  vk.f0 = g->sample([](double x, double y) { return 0.4 * x * x - 0.2 * y * y + 0.1 * x * y; });
  vk.h = g->sample([](double x, double y) { return std::sin(pi * x) * std::sin(pi * y); });
  return ForceModel::von_karman(vk, g);
}

}  // namespace

TEST(Kirchhoff, ZeroModel) {
  auto p = beam();
  Kirchhoff k;
  k.f = Polynomial{{0.0}};
  const ForceModel m = ForceModel::kirchhoff(k, p);
  const PlateFunction u{smooth_beam(*p)};
  EXPECT_EQ(force(m, u).values.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(potential(m, u), 0.0);
}

TEST(Kirchhoff, CubicNemytskii) {
  auto p = beam();
  Kirchhoff k;
  k.f = Polynomial{{0.0, 0.0, 0.0, 1.0}};
  const ForceModel m = ForceModel::kirchhoff(k, p);
  const PlateFunction u{smooth_beam(*p, 1.7)};
  const Vector f = force(m, u).values;
  for (int i = 0; i < p->size(); ++i) EXPECT_NEAR(f[i], std::pow(u.values[i], 3), 1e-14);
  double quartic = 0.0;
  for (double s : u.values) quartic += p->spacing() * std::pow(s, 4) / 4.0;
  EXPECT_NEAR(potential(m, u), quartic, 1e-14);
  EXPECT_LE(verify_gradient(m, u, 1e-5), 1e-5);
}

TEST(Kirchhoff, RejectsBadParameters) {
  auto p = beam();
  Kirchhoff k;
  k.q = 1.0;
  k.r = 1.0;
  EXPECT_THROW(ForceModel::kirchhoff(k, p), std::invalid_argument);
  Kirchhoff neg;
  neg.f = Polynomial{{0.0, 0.0, 0.0, -1.0}};
  EXPECT_THROW(ForceModel::kirchhoff(neg, p), std::invalid_argument);
}

TEST(Kirchhoff, FullModelGradient) {
  auto p = beam();
  Kirchhoff k;
  k.kappa = 0.3;
  k.q = 2.0;
  k.r = 0.5;
  k.mu = 1.5;
  k.h = p->sample([](double x) { return std::cos(3 * x); });
  const ForceModel m = ForceModel::kirchhoff(k, p);
  EXPECT_LE(verify_gradient(m, smooth_beam(*p, 0.8), 1e-5, 7), 1e-5);
}

TEST(Berger, ForceMatchesQuadratureOracle) {
  auto p = beam(128);
  const ForceModel m = ForceModel::berger({1.0, 0.0, {}}, p);
  const PlateFunction u{p->sample([](double x) { return std::pow(std::sin(pi * x), 2); })};
  const Vector f = force(m, u).values;
  // ∫|u'|² = π²/2, Δu = 2π² cos 2πx
  for (int i = 8; i < p->size() - 8; ++i) {
    const double x = p->node(i);
    const double oracle = -(pi * pi / 2) * 2 * pi * pi * std::cos(2 * pi * x);
    EXPECT_NEAR(f[i], oracle, 0.02 * std::abs(oracle) + 0.05);
  }
}

TEST(Berger, PotentialValue) {
  auto p = beam();
  const ForceModel m = ForceModel::berger({1.0, 0.0, {}}, p);
  Vector u = smooth_beam(*p);
  u *= std::sqrt(2.0 / u.dot(p->stiffness() * u));
  EXPECT_NEAR(potential(m, PlateFunction{u}), 1.0, 1e-12);
  EXPECT_EQ(potential(m, PlateFunction{Vector::Zero(32)}), 0.0);
  EXPECT_LE(verify_gradient(m, PlateFunction{u}, 1e-5), 1e-5);
}

TEST(NoForce, Trivial) {
  const ForceModel m = ForceModel::none();
  const Vector u = Vector::LinSpaced(10, 0.0, 1.0);
  EXPECT_EQ(force(m, PlateFunction{u}).values.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(potential(m, PlateFunction{u}), 0.0);
  EXPECT_EQ(verify_gradient(m, u, 1e-5, 1), 0.0);
}

TEST(ForceModel, DimensionMismatch) {
  const ForceModel vk = von_karman(8);
  EXPECT_THROW(force(vk, PlateFunction{Vector::Zero(32)}), std::invalid_argument);
  const ForceModel b = ForceModel::berger({}, beam());
  EXPECT_THROW(force(b, PlateFunction2D{Vector::Zero(81)}), std::invalid_argument);
  EXPECT_THROW(force(b, PlateFunction{Vector::Zero(5)}), std::invalid_argument);
}

TEST(Bracket, Polynomials) {
  const PlateGrid2D g(8, 1.0);
  const PlateFunction2D x2{g.sample([](double x, double) { return x * x; })};
  const PlateFunction2D y2{g.sample([](double, double y) { return y * y; })};
  const PlateFunction2D xy{g.sample([](double x, double y) { return x * y; })};
  const Vector a = vk_bracket(x2, y2, g).values, b = vk_bracket(xy, xy, g).values;
  for (int j = 1; j < 8; ++j) {
    for (int i = 1; i < 8; ++i) {
      EXPECT_NEAR(a[g.node(i, j)], 4.0, 1e-10);
      EXPECT_NEAR(b[g.node(i, j)], -2.0, 1e-10);
    }
  }
  std::mt19937_64 rng(2);
  std::normal_distribution<double> nd;
  PlateFunction2D u{Vector(g.num_nodes())}, v{Vector(g.num_nodes())};
  for (auto& s : u.values) s = nd(rng);
  for (auto& s : v.values) s = nd(rng);
  EXPECT_EQ((vk_bracket(u, v, g).values - vk_bracket(v, u, g).values).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Bracket, TripleSymmetrySecondOrder) {
  auto defect = [](int n) {
    const PlateGrid2D g(n, 1.0);
    const Vector u = clamped_2d(g, 1, 2), v = clamped_2d(g, 2, 1), w = clamped_2d(g, 3, 3);
    return std::abs(g.inner(bracket(g, u, v), w) - g.inner(bracket(g, u, w), v));
  };
  const double d16 = defect(16), d32 = defect(32);
  EXPECT_LT(d32, d16 / 3.0);
  EXPECT_LT(d32, 0.05);
}

TEST(Airy, ZeroHomogeneityResidual) {
  auto g = square(16);
  const AiryOperator op(g);
  EXPECT_EQ(airy_stress(PlateFunction2D{Vector::Zero(g->num_nodes())}, op).stress.values.cwiseAbs().maxCoeff(), 0.0);
  const Vector u = clamped_2d(*g, 1, 2);
  const AiryResult a = airy_stress(PlateFunction2D{u}, op);
  const AiryResult b = airy_stress(PlateFunction2D{3.0 * u}, op);
  EXPECT_LE((b.stress.values - 9.0 * a.stress.values).cwiseAbs().maxCoeff(), 1e-9 * (1 + a.stress.values.cwiseAbs().maxCoeff()));
  EXPECT_LE(a.relative_residual, 1e-8);
  // independent forward check of the clamped biharmonic: u = sin²(πx)sin²(πy) is clamped and smooth
  const Vector r = op.apply(a.stress.values) + bracket(*g, u, u);
  EXPECT_LE(std::sqrt(g->inner(r, r)), 1e-8 * std::sqrt(g->inner(bracket(*g, u, u), bracket(*g, u, u))));
}

TEST(Airy, ParallelogramIdentity) {
  auto g = square(16);
  const AiryOperator op(g);
  const Vector u1 = clamped_2d(*g, 1, 2), u2 = clamped_2d(*g, 3, 1, 0.7);
  auto v = [&](const Vector& u) { return airy_stress(PlateFunction2D{u}, op).stress.values; };
  const Vector lhs = v(u1 + u2) + v(u1 - u2), rhs = 2 * v(u1) + 2 * v(u2);
  EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(VonKarman, GradientConsistency) {
  const ForceModel m = von_karman();
  const Vector u = clamped_2d(*m.plate2d(), 1, 2, 1.3);
  EXPECT_LE(verify_gradient(m, PlateFunction2D{u}, 1e-5), 1e-4);
  // potential vanishes at zero without load
  const ForceModel bare = ForceModel::von_karman({}, square(8));
  EXPECT_EQ(potential(bare, PlateFunction2D{Vector::Zero(81)}), 0.0);
}

TEST(VonKarman, ForceApproximatesBracket) {
  // F(u) = -[u, v(u) + F0] - h up to discretization error
  const ForceModel m = von_karman(32);
  const PlateGrid2D& g = *m.plate2d();
  const Vector u = clamped_2d(g, 1, 1);
  const auto& spec = std::get<VonKarman>(m.spec());
  const Vector v = airy_stress(PlateFunction2D{u}, m).stress.values;
  const Vector direct = -bracket(g, u, v + spec.f0) - spec.h;
  const Vector f = force(m, PlateFunction2D{u}).values;
  double err = 0.0, scale = 0.0;
  for (int j = 4; j <= 28; ++j) {
    for (int i = 4; i <= 28; ++i) {
      const int k = g.node(i, j);
      err = std::max(err, std::abs(f[k] - direct[k]));
      scale = std::max(scale, std::abs(direct[k]));
    }
  }
  EXPECT_LT(err, 0.05 * scale);
}

TEST(Property, GradientConsistencyAllModels) {
  auto p = beam();
  std::vector<ForceModel> models = {ForceModel::none(), ForceModel::kirchhoff({}, p),
                                    ForceModel::berger({2.0, 3.0, p->sample([](double x) { return x; })}, p), von_karman(12)};
  std::mt19937_64 rng(42);
  for (const auto& m : models) {
    for (int t = 0; t < 20; ++t) {
      const Eigen::Index n = m.dimension() == 2 ? m.plate2d()->num_nodes() : p->size();
      const Vector u = smooth_direction(m, n, rng, true);
      EXPECT_LE(verify_gradient(m, u, 1e-5, 100 + t, 1), 1e-4) << m.name();
    }
  }
}

TEST(Lipschitz, Contracts) {
  auto p = beam();
  const auto basis = modal::solve_plate_eigenmodes(*p, 8);
  EXPECT_EQ(verify_lipschitz(ForceModel::none(), basis, 1.0, 10, 1).constant, 0.0);
  Kirchhoff lin;
  lin.f = Polynomial{{0.0, 1.0}};
  const ForceModel lm = ForceModel::kirchhoff(lin, p);
  const double c1 = verify_lipschitz(lm, basis, 1.0, 20, 3).constant;
  const double c2 = verify_lipschitz(lm, basis, 2.0, 20, 3).constant;
  EXPECT_NEAR(c1, c2, 0.1 * c1);
  const ForceModel bm = ForceModel::berger({1.0, 0.0, {}}, p);
  const LipschitzReport b1 = verify_lipschitz(bm, basis, 1.0, 20, 3), b2 = verify_lipschitz(bm, basis, 2.0, 20, 3);
  EXPECT_TRUE(std::isfinite(b1.constant));
  EXPECT_GT(b2.constant, b1.constant);
  EXPECT_THROW(verify_lipschitz(bm, basis, 1.0, 5, 3), std::invalid_argument);
}

TEST(Coercivity, Sweeps) {
  auto p = beam();
  const CoercivityReport none = verify_coercivity(ForceModel::none(), 10, 1);
  EXPECT_TRUE(none.pass);
  EXPECT_EQ(none.worst, 0.0);
  Kirchhoff cubic;
  cubic.f = Polynomial{{0.0, 0.0, 0.0, 1.0}};
  const CoercivityReport k = verify_coercivity(ForceModel::kirchhoff(cubic, p), 10, 1);
  EXPECT_TRUE(k.pass);
  EXPECT_GE(k.worst, 0.0);
  const CoercivityReport b = verify_coercivity(ForceModel::berger({1.0, 500.0, {}}, p), 10, 1);
  EXPECT_TRUE(b.pass);
  EXPECT_LT(b.worst, 0.0);
  EXPECT_TRUE(verify_coercivity(von_karman(12), 5, 1).pass);
}
