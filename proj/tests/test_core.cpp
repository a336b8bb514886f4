#include <doctest.h>

#include <cmath>
#include <numbers>

#include "hamlearn/errors.hpp"
#include "hamlearn/rk4.hpp"
#include "hamlearn/rng.hpp"
#include "hamlearn/systems.hpp"

using namespace hamlearn;

TEST_SUITE("core") {

TEST_CASE("apply_j on a 2-vector") {
  const auto v = apply_j(std::vector<double>{1.0, 2.0});
  CHECK(v == std::vector<double>{2.0, -1.0});
  const auto w = apply_j_inverse(std::vector<double>{1.0, 2.0});
  CHECK(w == std::vector<double>{-2.0, 1.0});
}

TEST_CASE("J algebra holds on random vectors") {
  CounterRng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 * (1 + trial % 4);
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(-10, 10);
    CHECK(apply_j(apply_j_inverse(v)) == v);
    CHECK(apply_j_inverse(apply_j(v)) == v);
    const auto jj = apply_j(apply_j(v));
    for (std::size_t i = 0; i < n; ++i) CHECK(jj[i] == -v[i]);
  }
}

TEST_CASE("StateVector validation") {
  CHECK_THROWS_AS(StateVector(std::vector<double>{1.0, 2.0, 3.0}), ArgumentError);
  CHECK_THROWS_AS(StateVector(std::vector<double>{}), ArgumentError);
  CHECK_THROWS_AS(StateVector({1.0, std::nan("")}), ArgumentError);
  const StateVector u{1.0, 2.0, 3.0, 4.0};
  CHECK(u.dim_d() == 2);
  CHECK(u.p()[1] == 2.0);
  CHECK(u.q()[0] == 3.0);
}

TEST_CASE("DomainBox validation and containment") {
  CHECK_THROWS_AS(DomainBox({0.0, 0.0}, {1.0, 0.0}), ArgumentError);
  CHECK_THROWS_AS(DomainBox({0.0}, {1.0}), ArgumentError);
  const auto box = DomainBox::cube(2, -1, 1);
  CHECK(box.volume() == doctest::Approx(4.0));
  CHECK(box.contains(std::vector<double>{0.5, -1.0}));
  CHECK_FALSE(box.contains(std::vector<double>{1.01, 0.0}));
}

TEST_CASE("oscillator returns to its start after one period") {
  const auto osc = harmonic_oscillator();
  const StateVector u0{0.3, -0.7};
  const auto traj = integrate(osc.rhs, u0, 1e-3, 2.0 * std::numbers::pi);
  CHECK(traj.times.back() == 2.0 * std::numbers::pi);
  for (std::size_t i = 0; i < 2; ++i) CHECK(std::abs(traj.states.back()[i] - u0[i]) < 1e-8);
}

TEST_CASE("RK4 global error is fourth order") {
  const auto osc = harmonic_oscillator();
  const StateVector u0{1.0, 0.0};
  // exact: p = cos t, q = sin t for H = (p^2 + q^2)/2
  auto error = [&](double step) {
    const auto traj = integrate(osc.rhs, u0, step, 2.0);
    return std::hypot(traj.states.back()[0] - std::cos(2.0), traj.states.back()[1] - std::sin(2.0));
  };
  for (double step : {0.1, 0.05, 0.025}) {
    const double ratio = error(step) / error(step / 2);
    CHECK(ratio > 16.0 * 0.75);
    CHECK(ratio < 16.0 * 1.25);
  }
}

TEST_CASE("integrate is bitwise deterministic") {
  const auto sys = builtin_system("henon_heiles");
  const StateVector u0{0.3, -0.25, 0.2, -0.25};
  const auto a = integrate(sys.rhs, u0, 1e-2, 3.0);
  const auto b = integrate(sys.rhs, u0, 1e-2, 3.0);
  CHECK(a.times == b.times);
  CHECK(a.states == b.states);
}

TEST_CASE("zero horizon gives only the origin") {
  const auto osc = harmonic_oscillator();
  const auto traj = integrate(osc.rhs, StateVector{1.0, 0.0}, 0.1, 0.0);
  CHECK(traj.size() == 1);
}

TEST_CASE("blow-up raises IntegrationError with its time") {
  // pdot = 0, qdot = q^2 from q = 1 blows up at t = 1
  const VectorField rhs = [](std::span<const double> u, std::span<double> out) {
    out[0] = 0.0;
    out[1] = u[1] * u[1];
  };
  try {
    (void)integrate(rhs, StateVector{0.0, 1.0}, 1e-2, 2.0);
    FAIL("expected IntegrationError");
  } catch (const IntegrationError& e) {
    CHECK(e.time() > 0.9);
    CHECK(e.time() < 1.1);
  }
  const auto partial = integrate_until_failure(rhs, StateVector{0.0, 1.0}, 1e-2, 2.0);
  CHECK(partial.failed);
  CHECK(partial.trajectory.size() > 50);
}

TEST_CASE("builtin rhs equals J^-1 grad H by finite differences") {
  CounterRng rng(11);
  for (const auto& name : builtin_names()) {
    CAPTURE(name);
    const auto sys = builtin_system(name);
    const std::size_t n = 2 * static_cast<std::size_t>(sys.dim_d);
    const auto& box = sys.default_domain;
    for (int k = 0; k < 100; ++k) {
      std::vector<double> u(n);
      for (std::size_t i = 0; i < n; ++i) u[i] = rng.uniform(box.lower()[i], box.upper()[i]);
      std::vector<double> grad(n);
      for (std::size_t i = 0; i < n; ++i) {
        const double h = 1e-5 * std::max(1.0, std::abs(u[i]));
        auto a = u, b = u;
        a[i] += h;
        b[i] -= h;
        grad[i] = (sys.hamiltonian(a) - sys.hamiltonian(b)) / (2 * h);
      }
      const auto jf = apply_j(sys.rhs_at(u));
      double scale = 0.0, diff = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        scale = std::max(scale, std::abs(jf[i]));
        diff = std::max(diff, std::abs(jf[i] - grad[i]));
      }
      CHECK(diff <= 1e-6 * std::max(1.0, scale));
    }
  }
}

TEST_CASE("builtin lookup") {
  CHECK_THROWS_AS(builtin_system("nope"), LookupError);
  CHECK(builtin_names().size() == 5);
  CHECK(builtin_system("pendulum").energy(StateVector{0.0, 0.0}) == 0.0);
  const auto cherry = builtin_system("cherry");
  CHECK(cherry.default_domain.lower() == std::vector<double>{-2, -1, -2, -1});
  CHECK(cherry.default_domain.upper() == std::vector<double>{2, 2, 1, 1});
}

TEST_CASE("hamiltonian deviation") {
  Trajectory constant;
  for (int i = 0; i < 5; ++i) {
    constant.times.push_back(i);
    constant.states.push_back(StateVector{0.2, 0.4});
  }
  const auto osc = harmonic_oscillator();
  for (const auto& [t, dh] : hamiltonian_deviation(constant, osc.hamiltonian)) CHECK(dh == 0.0);

  const auto traj = integrate(osc.rhs, StateVector{0.6, 0.1}, 0.01, 5.0);
  const auto dev = hamiltonian_deviation(traj, osc.hamiltonian);
  CHECK(dev.front().second == 0.0);
  for (const auto& [t, dh] : dev) CHECK(std::abs(dh) < 1e-9);
}

}  // TEST_SUITE
