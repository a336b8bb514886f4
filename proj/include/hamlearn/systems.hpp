#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "hamlearn/domain_box.hpp"
#include "hamlearn/phase_space.hpp"

namespace hamlearn {

struct HamiltonianSystem {
  std::string name;
  int dim_d = 0;
  ScalarField hamiltonian;  // H
  VectorField rhs;          // J^{-1} grad H
  DomainBox default_domain;

  double energy(const StateVector& u) const { return hamiltonian(u.values()); }
  std::vector<double> rhs_at(std::span<const double> u) const;
};

// grad H recovered from the rhs as J * rhs(u).
VectorField gradient_field(const HamiltonianSystem& system);

// One of: pendulum, exp_quartic, henon_heiles, cherry, double_pendulum.
// Throws LookupError otherwise.
HamiltonianSystem builtin_system(std::string_view name);
const std::vector<std::string>& builtin_names();

// H = (p^2 + q^2)/2 on [-1, 1]^2. Used as a closed-form reference.
HamiltonianSystem harmonic_oscillator();

}  // namespace hamlearn
