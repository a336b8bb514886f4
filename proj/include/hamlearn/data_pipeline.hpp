#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hamlearn/domain_box.hpp"
#include "hamlearn/rk4.hpp"
#include "hamlearn/systems.hpp"

namespace hamlearn {

struct BurstPlan {
  std::size_t trajectories = 500;    // M
  std::size_t steps_per_burst = 40;  // intervals per burst, J_steps + 1 samples
  double dt = 0.02;                  // observation spacing
  std::size_t fine_ratio = 10000;    // reference substep = dt / fine_ratio
  std::uint64_t seed = 0;

  void validate() const;
};

enum class NoiseKind { kMultiplicativeUniform };

struct NoiseSpec {
  double amplitude = 0.0;
  NoiseKind kind = NoiseKind::kMultiplicativeUniform;
};

struct DenoiseConfig {
  int degree = 5;
  bool apply_filter = true;
};

std::vector<StateVector> sample_initial_states(const BurstPlan& plan, const DomainBox& box);

struct DroppedBurst {
  std::size_t index;
  std::string reason;
};

struct BurstSet {
  std::vector<Trajectory> bursts;
  std::vector<std::size_t> source_index;  // position in the initial-state list
  std::vector<bool> exited_box;
  std::vector<DroppedBurst> dropped;

  std::size_t exited_count() const;
};

BurstSet generate_bursts(const HamiltonianSystem& system, const BurstPlan& plan,
                         const DomainBox& box, unsigned threads = 1);

// As above with caller-provided initial states.
BurstSet generate_bursts_from(const HamiltonianSystem& system, const BurstPlan& plan,
                              std::span<const StateVector> initial, const DomainBox& box,
                              unsigned threads = 1);

Trajectory add_noise(const Trajectory& traj, const NoiseSpec& spec, std::uint64_t seed);

// Second-order differences: central in the interior, three-point one-sided
// stencils at both ends. Requires >= 3 uniformly spaced samples.
std::vector<std::vector<double>> central_diff(const Trajectory& traj);

struct DenoiseResult {
  Trajectory filtered;
  std::vector<std::vector<double>> derivatives;
};

// Per-coordinate least-squares polynomial of degree cfg.degree in time
// (Legendre basis on the rescaled burst interval) and its derivative at the
// sample times.
DenoiseResult lsfit_denoise(const Trajectory& traj, const DenoiseConfig& cfg);

enum class DerivativeMethodKind { kCentralDiff, kLsFit, kAnalytic };

std::string to_string(DerivativeMethodKind kind);
DerivativeMethodKind derivative_method_from_string(const std::string& name);

struct DerivativeMethod {
  DerivativeMethodKind kind = DerivativeMethodKind::kCentralDiff;
  DenoiseConfig denoise;  // used by kLsFit

  static DerivativeMethod central() { return {DerivativeMethodKind::kCentralDiff, {}}; }
  static DerivativeMethod lsfit(DenoiseConfig cfg) { return {DerivativeMethodKind::kLsFit, cfg}; }
  // Exact rhs of the truth system; test mode only.
  static DerivativeMethod analytic() { return {DerivativeMethodKind::kAnalytic, {}}; }
};

struct PairProvenance {
  std::size_t bursts = 0;
  std::size_t pairs_outside_box = 0;
  std::size_t pairs_dropped = 0;
};

// The K pairs {x_k, xdot_k}, stored flat (K x 2d, row-major).
struct DataPairSet {
  int dim_d = 0;
  std::vector<double> states;
  std::vector<double> derivatives;
  std::vector<std::size_t> trajectory_ids;
  std::vector<double> times;
  std::optional<double> tau_bound;
  PairProvenance provenance;

  std::size_t count() const noexcept {
    return dim_d == 0 ? 0 : states.size() / (2 * static_cast<std::size_t>(dim_d));
  }
  std::size_t width() const noexcept { return 2 * static_cast<std::size_t>(dim_d); }
  std::span<const double> state(std::size_t k) const {
    return std::span<const double>(states).subspan(k * width(), width());
  }
  std::span<const double> derivative(std::size_t k) const {
    return std::span<const double>(derivatives).subspan(k * width(), width());
  }

  void push_back(std::size_t trajectory_id, double time, std::span<const double> x,
                 std::span<const double> xdot);
  void validate() const;

  // FNV-1a over the states and derivatives.
  std::uint64_t content_hash() const;
};

// Flattens all bursts in order. truth, when given, enables the analytic
// method and fills tau_bound = max_k |xdot_k - rhs(x_k)|_2.
DataPairSet assemble_pairs(std::span<const Trajectory> bursts, const DerivativeMethod& method,
                           const DomainBox& box, bool restrict_to_box,
                           const HamiltonianSystem* truth = nullptr, unsigned threads = 1);

}  // namespace hamlearn
