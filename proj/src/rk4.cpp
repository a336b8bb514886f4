#include "hamlearn/rk4.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hamlearn/errors.hpp"

namespace hamlearn {

Rk4Stepper::Rk4Stepper(std::size_t dim) : k1_(dim), k2_(dim), k3_(dim), k4_(dim), tmp_(dim) {}

void Rk4Stepper::check(std::span<const double> v, double time, std::size_t index) const {
  for (double x : v) {
    if (!std::isfinite(x)) {
      std::ostringstream msg;
      msg << "non-finite RK4 stage value at t=" << time << " (step " << index << ")";
      throw IntegrationError(msg.str(), time, index);
    }
  }
}

void Rk4Stepper::advance(const VectorField& rhs, std::span<double> u, double step, double time,
                         std::size_t index) {
  const std::size_t n = u.size();
  if (n != k1_.size()) throw ArgumentError("Rk4Stepper: state dimension mismatch");
  const double half = 0.5 * step;

  rhs(u, k1_);
  check(k1_, time, index);
  for (std::size_t i = 0; i < n; ++i) tmp_[i] = u[i] + half * k1_[i];
  rhs(tmp_, k2_);
  check(k2_, time, index);
  for (std::size_t i = 0; i < n; ++i) tmp_[i] = u[i] + half * k2_[i];
  rhs(tmp_, k3_);
  check(k3_, time, index);
  for (std::size_t i = 0; i < n; ++i) tmp_[i] = u[i] + step * k3_[i];
  rhs(tmp_, k4_);
  check(k4_, time, index);

  const double sixth = step / 6.0;
  for (std::size_t i = 0; i < n; ++i)
    u[i] += sixth * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
  check(u, time + step, index);
}

StateVector rk4_step(const VectorField& rhs, const StateVector& u, double step) {
  if (!(step > 0.0)) throw ArgumentError("rk4_step: step must be positive");
  std::vector<double> x = u.vec();
  Rk4Stepper stepper(x.size());
  stepper.advance(rhs, x, step);
  return StateVector(std::move(x));
}

namespace {

PartialIntegration run(const VectorField& rhs, const StateVector& u0, double step, double horizon,
                       bool stop_on_failure) {
  if (!(step > 0.0)) throw ArgumentError("integrate: step must be positive");
  if (!(horizon >= 0.0) || !std::isfinite(horizon))
    throw ArgumentError("integrate: horizon must be finite and nonnegative");
  const double ratio = horizon / step;
  if (!std::isfinite(ratio) || ratio > 1e12) throw ArgumentError("integrate: too many steps");

  // Whole steps; a ratio within 1e-9 of an integer counts as exact.
  std::size_t full = static_cast<std::size_t>(std::floor(ratio));
  const double nearest = std::round(ratio);
  if (std::abs(ratio - nearest) <= 1e-9 * std::max(1.0, ratio))
    full = static_cast<std::size_t>(nearest);
  const double tail = horizon - static_cast<double>(full) * step;
  const bool has_tail = tail > 1e-12 * std::max(1.0, horizon);

  PartialIntegration out;
  Trajectory& traj = out.trajectory;
  traj.times.reserve(full + 2);
  traj.states.reserve(full + 2);
  traj.times.push_back(0.0);
  traj.states.push_back(u0);

  std::vector<double> x = u0.vec();
  Rk4Stepper stepper(x.size());
  try {
    for (std::size_t k = 1; k <= full; ++k) {
      const double t0 = static_cast<double>(k - 1) * step;
      stepper.advance(rhs, x, step, t0, k);
      traj.times.push_back(static_cast<double>(k) * step);
      traj.states.emplace_back(x);
    }
    if (has_tail) {
      stepper.advance(rhs, x, tail, static_cast<double>(full) * step, full + 1);
      traj.times.push_back(horizon);
      traj.states.emplace_back(x);
    }
  } catch (const IntegrationError& e) {
    if (!stop_on_failure) throw;
    out.failed = true;
    out.failure_time = e.time();
  }
  return out;
}

}  // namespace

Trajectory integrate(const VectorField& rhs, const StateVector& u0, double step, double horizon) {
  return run(rhs, u0, step, horizon, false).trajectory;
}

PartialIntegration integrate_until_failure(const VectorField& rhs, const StateVector& u0,
                                           double step, double horizon) {
  return run(rhs, u0, step, horizon, true);
}

std::vector<std::pair<double, double>> hamiltonian_deviation(const Trajectory& traj,
                                                             const ScalarField& h) {
  if (traj.states.empty()) throw ArgumentError("hamiltonian_deviation: empty trajectory");
  std::vector<std::pair<double, double>> out;
  out.reserve(traj.size());
  const double h0 = h(traj.states.front().values());
  out.emplace_back(traj.times.front(), 0.0);
  for (std::size_t i = 1; i < traj.size(); ++i)
    out.emplace_back(traj.times[i], h(traj.states[i].values()) - h0);
  return out;
}

}  // namespace hamlearn
