// One line per acceptance criterion, run on the default configuration.
#include "plateflow/experiments.hpp"

#include <gtest/gtest.h>

#include <iostream>

using namespace plateflow;
using namespace plateflow::experiments;

namespace {

Context& shared() {
  static Context ctx = [] {
    config::ExperimentConfig c = config::parse_config(PLATEFLOW_DEFAULT_CONFIG);
    return Context(std::move(c), std::nullopt);
  }();
  return ctx;
}

void run(int id) {
  const Criterion c = run_check(find_check(id), shared());
  std::cout << "[acceptance] " << line(c) << std::endl;
  EXPECT_TRUE(c.pass) << io::to_string(c.metrics);
}

}  // namespace

// declaration order is execution order; C5 aggregates every earlier run
TEST(Acceptance, C01_MassMatrixPositivity) { run(1); }
TEST(Acceptance, C02_EnergyBalance) { run(2); }
TEST(Acceptance, C03_ExponentialStability) { run(3); }
TEST(Acceptance, C04_LyapunovConstruction) { run(4); }
TEST(Acceptance, C06_ForceModelContracts) { run(6); }
TEST(Acceptance, C07_GradientStructureEquilibria) { run(7); }
TEST(Acceptance, C08_QuasiStability) { run(8); }
TEST(Acceptance, C09_GeneratorIdentities) { run(9); }
TEST(Acceptance, C10_AttractorRegularity) { run(10); }
TEST(Acceptance, C05_MeanPreservation) { run(5); }
