#include "hamlearn/systems.hpp"

#include <cmath>
#include <numbers>

#include "hamlearn/errors.hpp"

namespace hamlearn {

std::vector<double> HamiltonianSystem::rhs_at(std::span<const double> u) const {
  std::vector<double> out(u.size());
  rhs(u, out);
  return out;
}

VectorField gradient_field(const HamiltonianSystem& system) {
  return [rhs = system.rhs](std::span<const double> u, std::span<double> out) {
    thread_local std::vector<double> f;
    f.resize(u.size());
    rhs(u, f);
    apply_j(f, out);
  };
}

namespace {

constexpr double kPi = std::numbers::pi;

HamiltonianSystem pendulum() {
  constexpr double l = 1.0, g = 9.8;
  HamiltonianSystem s;
  s.name = "pendulum";
  s.dim_d = 1;
  s.hamiltonian = [](std::span<const double> u) {
    return u[0] * u[0] / (2.0 * l * l) + g * l * (1.0 - std::cos(u[1]));
  };
  s.rhs = [](std::span<const double> u, std::span<double> out) {
    out[0] = -g * l * std::sin(u[1]);
    out[1] = u[0] / (l * l);
  };
  s.default_domain = DomainBox({-2 * kPi, -kPi}, {2 * kPi, kPi});
  return s;
}

HamiltonianSystem exp_quartic() {
  constexpr double a1 = 1.0, a2 = 1.1;
  HamiltonianSystem s;
  s.name = "exp_quartic";
  s.dim_d = 1;
  s.hamiltonian = [](std::span<const double> u) {
    const double q2 = u[1] * u[1];
    return std::exp(-a1 * u[0] * u[0] - a2 * q2 * q2);
  };
  s.rhs = [](std::span<const double> u, std::span<double> out) {
    const double p = u[0], q = u[1];
    const double e = std::exp(-a1 * p * p - a2 * q * q * q * q);
    out[0] = 4.0 * a2 * q * q * q * e;
    out[1] = -2.0 * a1 * p * e;
  };
  s.default_domain = DomainBox::cube(2, -1.0, 1.0);
  return s;
}

HamiltonianSystem henon_heiles() {
  HamiltonianSystem s;
  s.name = "henon_heiles";
  s.dim_d = 2;
  s.hamiltonian = [](std::span<const double> u) {
    const double p1 = u[0], p2 = u[1], q1 = u[2], q2 = u[3];
    return 0.5 * (p1 * p1 + p2 * p2) + 0.5 * (q1 * q1 + q2 * q2) + q1 * q1 * q2 -
           q2 * q2 * q2 / 3.0;
  };
  s.rhs = [](std::span<const double> u, std::span<double> out) {
    const double p1 = u[0], p2 = u[1], q1 = u[2], q2 = u[3];
    out[0] = -q1 - 2.0 * q1 * q2;
    out[1] = -q2 - q1 * q1 + q2 * q2;
    out[2] = p1;
    out[3] = p2;
  };
  s.default_domain = DomainBox::cube(4, -1.0, 1.0);
  return s;
}

HamiltonianSystem cherry() {
  HamiltonianSystem s;
  s.name = "cherry";
  s.dim_d = 2;
  s.hamiltonian = [](std::span<const double> u) {
    const double p1 = u[0], p2 = u[1], q1 = u[2], q2 = u[3];
    return 0.5 * (q1 * q1 + p1 * p1) - (q2 * q2 + p2 * p2) + 0.5 * p2 * (p1 * p1 - q1 * q1) -
           q1 * q2 * p1;
  };
  s.rhs = [](std::span<const double> u, std::span<double> out) {
    const double p1 = u[0], p2 = u[1], q1 = u[2], q2 = u[3];
    out[0] = -q1 + p2 * q1 + q2 * p1;
    out[1] = 2.0 * q2 + q1 * p1;
    out[2] = p1 + p2 * p1 - q1 * q2;
    out[3] = -2.0 * p2 + 0.5 * (p1 * p1 - q1 * q1);
  };
  s.default_domain = DomainBox({-2.0, -1.0, -2.0, -1.0}, {2.0, 2.0, 1.0, 1.0});
  return s;
}

struct DoublePendulum {
  double m1 = 1, m2 = 1, l1 = 1, l2 = 1, g = 9.8;

  double denom(double dq) const {
    const double s = std::sin(dq);
    return m1 + m2 * s * s;
  }
  double c1(double p1, double p2, double dq) const {
    return p1 * p2 * std::sin(dq) / (l1 * l2 * denom(dq));
  }
  double c2(double p1, double p2, double dq) const {
    return (m2 * l2 * l2 * p1 * p1 + (m1 + m2) * l1 * l1 * p2 * p2 -
            2.0 * m2 * l1 * l2 * p1 * p2 * std::cos(dq)) /
           (2.0 * l1 * l1 * l2 * l2 * denom(dq) * denom(dq));
  }

  double energy(std::span<const double> u) const {
    const double p1 = u[0], p2 = u[1], q1 = u[2], q2 = u[3];
    const double dq = q1 - q2;
    const double kinetic = (m2 * l2 * l2 * p1 * p1 + (m1 + m2) * l1 * l1 * p2 * p2 -
                            2.0 * m2 * l1 * l2 * p1 * p2 * std::cos(dq)) /
                           (2.0 * m2 * l1 * l1 * l2 * l2 * denom(dq));
    return kinetic - (m1 + m2) * g * l1 * std::cos(q1) - m2 * g * l2 * std::cos(q2);
  }

  void rhs(std::span<const double> u, std::span<double> out) const {
    const double p1 = u[0], p2 = u[1], q1 = u[2], q2 = u[3];
    const double dq = q1 - q2;
    const double a = c1(p1, p2, dq);
    const double b = c2(p1, p2, dq) * std::sin(2.0 * dq);
    const double den = denom(dq);
    out[0] = -(m1 + m2) * g * l1 * std::sin(q1) - a + b;
    out[1] = -m2 * g * l2 * std::sin(q2) + a - b;
    out[2] = (l2 * p1 - l1 * p2 * std::cos(dq)) / (l1 * l1 * l2 * den);
    out[3] = (-m2 * l2 * p1 * std::cos(dq) + (m1 + m2) * l1 * p2) / (m2 * l1 * l2 * l2 * den);
  }
};

HamiltonianSystem double_pendulum() {
  const DoublePendulum dp;
  HamiltonianSystem s;
  s.name = "double_pendulum";
  s.dim_d = 2;
  s.hamiltonian = [dp](std::span<const double> u) { return dp.energy(u); };
  s.rhs = [dp](std::span<const double> u, std::span<double> out) { dp.rhs(u, out); };
  s.default_domain = DomainBox({-5.0, -4.0, -1.0, -1.0}, {5.0, 4.0, 1.0, 1.0});
  return s;
}

}  // namespace

const std::vector<std::string>& builtin_names() {
  static const std::vector<std::string> names{"pendulum", "exp_quartic", "henon_heiles", "cherry",
                                              "double_pendulum"};
  return names;
}

HamiltonianSystem builtin_system(std::string_view name) {
  if (name == "pendulum") return pendulum();
  if (name == "exp_quartic") return exp_quartic();
  if (name == "henon_heiles") return henon_heiles();
  if (name == "cherry") return cherry();
  if (name == "double_pendulum") return double_pendulum();
  throw LookupError("unknown builtin system '" + std::string(name) + "'");
}

HamiltonianSystem harmonic_oscillator() {
  HamiltonianSystem s;
  s.name = "harmonic_oscillator";
  s.dim_d = 1;
  s.hamiltonian = [](std::span<const double> u) { return 0.5 * (u[0] * u[0] + u[1] * u[1]); };
  s.rhs = [](std::span<const double> u, std::span<double> out) {
    out[0] = -u[1];
    out[1] = u[0];
  };
  s.default_domain = DomainBox::cube(2, -1.0, 1.0);
  return s;
}

}  // namespace hamlearn
