#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hamlearn/data_pipeline.hpp"
#include "hamlearn/errors.hpp"
#include "hamlearn/learner.hpp"
#include "hamlearn/poly_basis.hpp"
#include "hamlearn/rk4.hpp"

namespace hamlearn {

struct ExperimentConfig {
  std::string system = "pendulum";
  int degree = 6;
  std::size_t trajectories = 500;
  std::size_t steps_per_burst = 40;
  double dt = 0.02;
  std::size_t fine_ratio = 10000;
  double noise_amplitude = 0.08;
  DerivativeMethodKind derivative_method = DerivativeMethodKind::kLsFit;
  int denoise_degree = 5;
  bool denoise_filter = true;
  std::vector<double> test_initial_state{-3.876, -1.193};
  double horizon = 20.0;
  double eval_step = 2.5e-4;
  std::uint64_t seed = 1;
  bool baseline_nonsp = false;
  bool baseline_no_filter = false;
  double stability_r = 1.0;
  std::vector<double> domain_lower;  // empty: the system's default domain
  std::vector<double> domain_upper;
  DomainPolicy domain_policy = DomainPolicy::kExtrapolate;
  bool restrict_to_box = true;
  bool diagnostics = true;
  std::size_t series_stride = 10;
  double solver_rel_tol = 1e-10;
  std::string output_dir = "out";
  unsigned threads = 1;  // never affects results

  void validate() const;
  DomainBox domain() const;

  // Keys that determine results. output_dir and threads are excluded so
  // that output files are identical across machines and thread counts.
  nlohmann::ordered_json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load(const std::filesystem::path& path);
  std::string hash() const;
};

// Example-derived presets keyed by system name.
const std::vector<std::string>& preset_names();
ExperimentConfig preset(const std::string& name);

struct StageError : Error {
  StageError(std::string stage, const std::string& what)
      : Error(stage + ": " + what), stage_name(std::move(stage)) {}
  std::string stage_name;
};

struct Timings {
  double generate = 0, differentiate = 0, learn = 0, simulate = 0, diagnostics = 0;
};

// Everything produced by the learning half of the pipeline.
struct LearnedSystem {
  DataPairSet pairs;
  std::optional<HamiltonianModel> model;
  std::optional<NonSPModel> nonsp;
  std::optional<HamiltonianModel> no_filter_model;
  BurstSet bursts;
  Timings timings;
};

LearnedSystem learn(const ExperimentConfig& cfg);

// Simulated comparison of a vector field against the truth from u0*.
struct ComparisonSeries {
  std::vector<double> relative_error;
  Trajectory trajectory;
  bool diverged = false;
  double diverged_time = 0.0;
  // Trapezoidal mean over [0, T] at full resolution; +inf after divergence.
  double mean_error = 0.0;
  double time_averaged_error() const { return mean_error; }
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<double> times;
  std::vector<double> relative_error;
  std::vector<double> h_true;
  std::vector<double> h_tilde_aligned;
  std::vector<double> delta_h_tilde;
  Trajectory truth;
  Trajectory reconstructed;
  bool diverged = false;
  double diverged_time = 0.0;
  double mean_relative_error = 0.0;  // full resolution, see ComparisonSeries
  double sup_delta_h = 0.0;          // full resolution
  double alignment_offset = 0.0;     // C = mean(H - H~_0) over the training states
  std::vector<std::string> warnings;
  std::optional<HamiltonianModel> model;
  DataPairSet pairs;
  std::size_t dropped_bursts = 0;
  std::size_t exited_bursts = 0;
  std::optional<DiagnosticsReport> diagnostics;
  std::optional<StabilityDiagnostic> stability;
  std::optional<ComparisonSeries> nonsp;
  std::optional<ComparisonSeries> no_filter;
  Timings timings;

  double time_averaged_relative_error() const { return mean_relative_error; }
  double max_abs_delta_h() const { return sup_delta_h; }
  // Relative error at the full-resolution sample nearest to t.
  double relative_error_at(double t) const;
  nlohmann::ordered_json summary() const;
};

ExperimentReport run_experiment(const ExperimentConfig& cfg);

// Pairs SP and non-SP fits on identical data.
ExperimentReport run_nonsp_comparison(ExperimentConfig cfg);

struct ConvergenceStudy {
  std::vector<double> steps;
  std::vector<double> linf;
  std::vector<double> l2;  // sqrt of the trapezoidal integral of dH^2
  std::vector<double> total_variation;  // sum |dH(t_{i+1}) - dH(t_i)|
  std::vector<double> max_increment;    // max |dH(t_{i+1}) - dH(t_i)|
  std::vector<double> order_linf, order_l2, order_total_variation, order_max_increment;

  nlohmann::ordered_json to_json() const;
};

ConvergenceStudy run_convergence_study(const ExperimentConfig& cfg, std::vector<double> steps);
ConvergenceStudy run_convergence_study(const HamiltonianModel& model, const StateVector& u0,
                                       double horizon, std::vector<double> steps);

// log2(e_i / e_{i+1}) / log2(tau_i / tau_{i+1}).
std::vector<double> observed_orders(const std::vector<double>& steps,
                                    const std::vector<double>& errors);

std::vector<std::filesystem::path> emit_outputs(const ExperimentReport& report,
                                                const std::filesystem::path& dir,
                                                const std::string& command = "run");
std::vector<std::filesystem::path> emit_convergence(const ConvergenceStudy& study,
                                                    const ExperimentConfig& cfg,
                                                    const std::filesystem::path& dir);

}  // namespace hamlearn
