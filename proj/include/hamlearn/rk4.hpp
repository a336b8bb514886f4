#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "hamlearn/phase_space.hpp"

namespace hamlearn {

enum class Scheme { kRk4 };

struct IntegratorConfig {
  double step = 1e-3;
  Scheme scheme = Scheme::kRk4;
};

// Sampled solution u(t; u0). times are strictly increasing and states[0]
// is the origin.
struct Trajectory {
  std::vector<double> times;
  std::vector<StateVector> states;

  const StateVector& origin() const { return states.front(); }
  std::size_t size() const noexcept { return states.size(); }
  int dim_d() const { return states.empty() ? 0 : states.front().dim_d(); }
};

// Classical four-stage Runge-Kutta with reusable stage buffers. The hot loops
// of burst generation and long-horizon simulation drive this directly.
class Rk4Stepper {
 public:
  explicit Rk4Stepper(std::size_t dim);

  // Advances u in place by one step. time/index are only used in diagnostics.
  void advance(const VectorField& rhs, std::span<double> u, double step, double time = 0.0,
               std::size_t index = 0);

 private:
  void check(std::span<const double> v, double time, std::size_t index) const;

  std::vector<double> k1_, k2_, k3_, k4_, tmp_;
};

StateVector rk4_step(const VectorField& rhs, const StateVector& u, double step);

// Samples at 0, step, 2*step, ...; when horizon is not a multiple of step the
// last step is shortened so the final sample lands exactly on horizon.
Trajectory integrate(const VectorField& rhs, const StateVector& u0, double step, double horizon);

// As integrate, but a non-finite stage stops the run instead of throwing:
// the samples computed so far are kept and failure_time records where it broke.
struct PartialIntegration {
  Trajectory trajectory;
  bool failed = false;
  double failure_time = 0.0;
};
PartialIntegration integrate_until_failure(const VectorField& rhs, const StateVector& u0,
                                           double step, double horizon);

// (t, H(u(t)) - H(u(0))) for every sample.
std::vector<std::pair<double, double>> hamiltonian_deviation(const Trajectory& traj,
                                                             const ScalarField& h);

}  // namespace hamlearn
