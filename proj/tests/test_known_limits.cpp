#include <doctest.h>

#include <algorithm>

#include "hamlearn/experiment.hpp"

using namespace hamlearn;

TEST_SUITE("known_limits") {

// Noiseless pendulum with exact derivatives at degree 6. The error is
// dominated by how well P_6 resolves 1 - cos q on the training box.
TEST_CASE("pendulum with analytic derivatives stays within 1e-3 over [0, 10]") {
  auto c = preset("pendulum");
  c.noise_amplitude = 0.0;
  c.derivative_method = DerivativeMethodKind::kAnalytic;
  c.horizon = 10.0;
  c.diagnostics = false;
  const auto r = run_experiment(c);
  const double worst = *std::max_element(r.relative_error.begin(), r.relative_error.end());
  MESSAGE("max relative error " << worst);
  CHECK(worst <= 1e-3);
}

}  // TEST_SUITE
