#include "hamlearn/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <set>

#include "hamlearn/io.hpp"
#include "hamlearn/rng.hpp"

namespace hamlearn {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Runs fn, tagging library errors with the stage name.
template <class Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(name, e.what());
  }
}

double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double relative_error_of(std::span<const double> approx, std::span<const double> truth) {
  double s = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) s += (approx[i] - truth[i]) * (approx[i] - truth[i]);
  return std::sqrt(s) / std::max(l2_norm(truth), 1e-12);
}

// Trapezoidal time average of f over the samples of `times`.
double time_average(const std::vector<double>& times, const std::vector<double>& f) {
  if (f.empty()) return 0.0;
  if (f.size() == 1) return f[0];
  double acc = 0.0;
  for (std::size_t i = 1; i < f.size(); ++i)
    acc += 0.5 * (f[i] + f[i - 1]) * (times[i] - times[i - 1]);
  return acc / (times.back() - times.front());
}

std::vector<std::size_t> strided_indices(std::size_t n, std::size_t stride) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < n; i += stride) idx.push_back(i);
  if (n > 0 && idx.back() != n - 1) idx.push_back(n - 1);
  return idx;
}

ComparisonSeries compare(const VectorField& field, const ExperimentConfig& cfg,
                         const Trajectory& truth, const std::vector<std::size_t>& idx) {
  const StateVector u0(cfg.test_initial_state);
  PartialIntegration run = integrate_until_failure(field, u0, cfg.eval_step, cfg.horizon);
  ComparisonSeries out;
  out.trajectory = std::move(run.trajectory);
  out.diverged = run.failed;
  out.diverged_time = run.failure_time;
  std::vector<double> full(truth.size(), std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < out.trajectory.size(); ++i)
    full[i] = relative_error_of(out.trajectory.states[i].values(), truth.states[i].values());
  out.mean_error = time_average(truth.times, full);
  out.relative_error.reserve(idx.size());
  for (std::size_t i : idx)
    out.relative_error.push_back(i < out.trajectory.size() ? full[i]
                                                           : std::numeric_limits<double>::quiet_NaN());
  return out;
}

nlohmann::ordered_json finite_or_null(double v) {
  return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
}

const std::vector<std::string> kConfigKeys = {
    "system", "degree", "trajectories", "steps_per_burst", "dt", "fine_ratio",
    "noise_amplitude", "derivative_method", "denoise_degree", "denoise_filter",
    "test_initial_state", "horizon", "eval_step", "seed", "baseline_nonsp",
    "baseline_no_filter", "stability_r", "domain_lower", "domain_upper", "domain_policy",
    "restrict_to_box", "diagnostics", "series_stride", "solver_rel_tol"};

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  const auto& names = builtin_names();
  if (std::find(names.begin(), names.end(), system) == names.end())
    fail("unknown system '" + system + "'");
  const int d = builtin_system(system).dim_d;
  if (degree < 1) fail("degree must be >= 1");
  if (trajectories < 1) fail("trajectories must be >= 1");
  if (steps_per_burst < 1) fail("steps_per_burst must be >= 1");
  if (!(dt > 0.0) || !std::isfinite(dt)) fail("dt must be positive");
  if (fine_ratio < 1) fail("fine_ratio must be >= 1");
  if (!(noise_amplitude >= 0.0 && noise_amplitude < 1.0)) fail("noise_amplitude must be in [0, 1)");
  if (derivative_method == DerivativeMethodKind::kCentralDiff && steps_per_burst < 2)
    fail("central differences need steps_per_burst >= 2");
  if (derivative_method == DerivativeMethodKind::kLsFit &&
      (denoise_degree < 1 || static_cast<std::size_t>(denoise_degree) > steps_per_burst))
    fail("denoise_degree must be in [1, steps_per_burst]");
  if (baseline_no_filter && derivative_method != DerivativeMethodKind::kLsFit)
    fail("baseline_no_filter requires derivative_method = lsfit");
  if (test_initial_state.size() != 2 * static_cast<std::size_t>(d))
    fail("test_initial_state must have " + std::to_string(2 * d) + " entries for " + system);
  for (double v : test_initial_state)
    if (!std::isfinite(v)) fail("test_initial_state must be finite");
  if (!(horizon >= 0.0) || !std::isfinite(horizon)) fail("horizon must be >= 0");
  if (!(eval_step > 0.0) || !std::isfinite(eval_step)) fail("eval_step must be positive");
  if (!(stability_r > 0.0)) fail("stability_r must be positive");
  if (domain_lower.empty() != domain_upper.empty())
    fail("domain_lower and domain_upper must be given together");
  if (!domain_lower.empty()) {
    if (domain_lower.size() != 2 * static_cast<std::size_t>(d) ||
        domain_upper.size() != domain_lower.size())
      fail("domain bounds must have " + std::to_string(2 * d) + " entries");
    for (std::size_t i = 0; i < domain_lower.size(); ++i)
      if (!(domain_lower[i] < domain_upper[i])) fail("domain_lower must be below domain_upper");
  }
  if (series_stride < 1) fail("series_stride must be >= 1");
  if (!(solver_rel_tol > 0.0 && solver_rel_tol < 1.0)) fail("solver_rel_tol must be in (0, 1)");
  if (threads < 1) fail("threads must be >= 1");
}

DomainBox ExperimentConfig::domain() const {
  if (domain_lower.empty()) return builtin_system(system).default_domain;
  return DomainBox(domain_lower, domain_upper);
}

nlohmann::ordered_json ExperimentConfig::to_json() const {
  nlohmann::ordered_json j;
  j["system"] = system;
  j["degree"] = degree;
  j["trajectories"] = trajectories;
  j["steps_per_burst"] = steps_per_burst;
  j["dt"] = dt;
  j["fine_ratio"] = fine_ratio;
  j["noise_amplitude"] = noise_amplitude;
  j["derivative_method"] = to_string(derivative_method);
  j["denoise_degree"] = denoise_degree;
  j["denoise_filter"] = denoise_filter;
  j["test_initial_state"] = test_initial_state;
  j["horizon"] = horizon;
  j["eval_step"] = eval_step;
  j["seed"] = seed;
  j["baseline_nonsp"] = baseline_nonsp;
  j["baseline_no_filter"] = baseline_no_filter;
  j["stability_r"] = stability_r;
  j["domain_lower"] = domain_lower;
  j["domain_upper"] = domain_upper;
  j["domain_policy"] = to_string(domain_policy);
  j["restrict_to_box"] = restrict_to_box;
  j["diagnostics"] = diagnostics;
  j["series_stride"] = series_stride;
  j["solver_rel_tol"] = solver_rel_tol;
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig c;
  if (j.contains("preset")) {
    if (!j["preset"].is_string()) throw ConfigError("preset must be a string");
    c = preset(j["preset"].get<std::string>());
  } else if (j.contains("system") && j["system"].is_string()) {
    const auto& names = preset_names();
    const auto sys = j["system"].get<std::string>();
    if (std::find(names.begin(), names.end(), sys) != names.end()) c = preset(sys);
  }
  for (const auto& [key, value] : j.items()) {
    if (key == "preset" || key == "output_dir" || key == "threads") continue;
    if (std::find(kConfigKeys.begin(), kConfigKeys.end(), key) == kConfigKeys.end())
      throw ConfigError("unknown config key '" + key + "'");
  }
  try {
    auto get = [&j](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("system", c.system);
    get("degree", c.degree);
    get("trajectories", c.trajectories);
    get("steps_per_burst", c.steps_per_burst);
    get("dt", c.dt);
    get("fine_ratio", c.fine_ratio);
    get("noise_amplitude", c.noise_amplitude);
    if (j.contains("derivative_method"))
      c.derivative_method = derivative_method_from_string(j["derivative_method"].get<std::string>());
    get("denoise_degree", c.denoise_degree);
    get("denoise_filter", c.denoise_filter);
    get("test_initial_state", c.test_initial_state);
    get("horizon", c.horizon);
    get("eval_step", c.eval_step);
    get("seed", c.seed);
    get("baseline_nonsp", c.baseline_nonsp);
    get("baseline_no_filter", c.baseline_no_filter);
    get("stability_r", c.stability_r);
    get("domain_lower", c.domain_lower);
    get("domain_upper", c.domain_upper);
    if (j.contains("domain_policy"))
      c.domain_policy = domain_policy_from_string(j["domain_policy"].get<std::string>());
    get("restrict_to_box", c.restrict_to_box);
    get("diagnostics", c.diagnostics);
    get("series_stride", c.series_stride);
    get("solver_rel_tol", c.solver_rel_tol);
    get("output_dir", c.output_dir);
    get("threads", c.threads);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  } catch (const ArgumentError& e) {
    throw ConfigError(e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return from_json(j);
}

std::string ExperimentConfig::hash() const {
  const std::string text = to_json().dump();
  return hex64(fnv1a(std::span(reinterpret_cast<const unsigned char*>(text.data()), text.size())));
}

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {"pendulum", "exp_quartic", "henon_heiles",
                                                 "cherry", "double_pendulum"};
  return names;
}

ExperimentConfig preset(const std::string& name) {
  ExperimentConfig c;  // defaults are the pendulum example
  auto noiseless = [&c] {
    c.noise_amplitude = 0.0;
    c.derivative_method = DerivativeMethodKind::kCentralDiff;
    c.steps_per_burst = 2;
    c.dt = 0.01;
  };
  if (name == "pendulum") return c;
  if (name == "exp_quartic") {
    c.system = name;
    noiseless();
    c.trajectories = 300;
    c.degree = 6;
    c.test_initial_state = {0.6, 0.6};
    c.horizon = 20.0;
    return c;
  }
  if (name == "henon_heiles") {
    c.system = name;
    noiseless();
    c.trajectories = 500;
    c.degree = 3;
    c.test_initial_state = {0.3, -0.25, 0.2, -0.25};
    c.horizon = 10.0;
    return c;
  }
  if (name == "cherry") {
    c.system = name;
    noiseless();
    c.trajectories = 500;
    c.degree = 3;
    c.test_initial_state = {-0.05, 0.1, 0.15, 0.1};
    c.horizon = 10.0;
    return c;
  }
  if (name == "double_pendulum") {
    c.system = name;
    noiseless();
    c.trajectories = 20000;
    c.degree = 15;
    c.fine_ratio = 100;
    c.test_initial_state = {0.0, 0.0, std::numbers::pi / 6.0, std::numbers::pi / 4.0};
    c.horizon = 20.0;
    c.diagnostics = false;
    return c;
  }
  throw ConfigError("unknown preset '" + name + "'");
}

// ---------------------------------------------------------------------------
// Pipeline

LearnedSystem learn(const ExperimentConfig& cfg) {
  cfg.validate();
  LearnedSystem out;
  const HamiltonianSystem system = builtin_system(cfg.system);
  const DomainBox box = cfg.domain();

  auto t0 = Clock::now();
  BurstPlan plan;
  plan.trajectories = cfg.trajectories;
  plan.steps_per_burst = cfg.steps_per_burst;
  plan.dt = cfg.dt;
  plan.fine_ratio = cfg.fine_ratio;
  plan.seed = cfg.seed;
  out.bursts = stage("generate", [&] { return generate_bursts(system, plan, box, cfg.threads); });
  if (out.bursts.bursts.empty())
    throw StageError("generate", "every burst was dropped");

  std::vector<Trajectory> observed = stage("noise", [&] {
    std::vector<Trajectory> noisy(out.bursts.bursts.size());
    const CounterRng noise_rng = CounterRng(cfg.seed).split(streams::kNoise);
    const NoiseSpec spec{cfg.noise_amplitude};
    for (std::size_t i = 0; i < noisy.size(); ++i) {
      const std::uint64_t key = noise_rng.split(out.bursts.source_index[i]).next();
      noisy[i] = add_noise(out.bursts.bursts[i], spec, key);
    }
    return noisy;
  });
  out.timings.generate = seconds_since(t0);

  t0 = Clock::now();
  DerivativeMethod method;
  method.kind = cfg.derivative_method;
  method.denoise = DenoiseConfig{cfg.denoise_degree, cfg.denoise_filter};
  out.pairs = stage("differentiate", [&] {
    return assemble_pairs(observed, method, box, cfg.restrict_to_box, &system, cfg.threads);
  });
  out.timings.differentiate = seconds_since(t0);

  t0 = Clock::now();
  const TotalDegreeBasis basis =
      stage("basis", [&] { return TotalDegreeBasis(cfg.degree, box, cfg.domain_policy); });
  out.model = stage("solve", [&] {
    return fit_hamiltonian(out.pairs, basis, cfg.solver_rel_tol, cfg.threads);
  });
  if (cfg.baseline_nonsp)
    out.nonsp = stage("solve_nonsp", [&] {
      return fit_nonsp(out.pairs, basis, cfg.solver_rel_tol, cfg.threads);
    });
  if (cfg.baseline_no_filter) {
    out.no_filter_model = stage("solve_no_filter", [&] {
      DerivativeMethod raw = method;
      raw.denoise.apply_filter = false;
      const DataPairSet raw_pairs =
          assemble_pairs(observed, raw, box, cfg.restrict_to_box, &system, cfg.threads);
      return fit_hamiltonian(raw_pairs, basis, cfg.solver_rel_tol, cfg.threads);
    });
  }
  out.timings.learn = seconds_since(t0);
  return out;
}

double ExperimentReport::relative_error_at(double t) const {
  if (truth.size() == 0) throw ArgumentError("relative_error_at: empty report");
  const auto it = std::lower_bound(truth.times.begin(), truth.times.end(), t);
  std::size_t i = static_cast<std::size_t>(it - truth.times.begin());
  if (i == truth.size()) i = truth.size() - 1;
  if (i > 0 && std::abs(truth.times[i - 1] - t) < std::abs(truth.times[i] - t)) --i;
  if (i >= reconstructed.size()) return std::numeric_limits<double>::infinity();
  return relative_error_of(reconstructed.states[i].values(), truth.states[i].values());
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  LearnedSystem learned = learn(cfg);
  const HamiltonianSystem system = builtin_system(cfg.system);
  const HamiltonianModel& model = *learned.model;
  const StateVector u0 = stage("simulate", [&] { return StateVector(cfg.test_initial_state); });

  ExperimentReport r;
  r.config = cfg;
  r.timings = learned.timings;
  r.dropped_bursts = learned.bursts.dropped.size();
  r.exited_bursts = learned.bursts.exited_count();

  auto t0 = Clock::now();
  r.truth = stage("simulate", [&] { return integrate(system.rhs, u0, cfg.eval_step, cfg.horizon); });
  const std::vector<std::size_t> idx = strided_indices(r.truth.size(), cfg.series_stride);
  const HamiltonianSystem recon = reconstructed_system(model);
  ComparisonSeries sp = stage("simulate", [&] { return compare(recon.rhs, cfg, r.truth, idx); });
  r.reconstructed = std::move(sp.trajectory);
  r.diverged = sp.diverged;
  r.diverged_time = sp.diverged_time;
  r.mean_relative_error = sp.mean_error;

  // Quotient alignment over the training states.
  const AlignmentResult align = alignment_error(model, system.hamiltonian, learned.pairs.states);
  r.alignment_offset = align.offset;

  const double h0 = model.eval(u0.values());
  for (std::size_t i = 0; i < r.reconstructed.size(); ++i)
    r.sup_delta_h = std::max(r.sup_delta_h, std::abs(model.eval(r.reconstructed.states[i].values()) - h0));
  if (r.diverged) r.sup_delta_h = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const std::size_t i = idx[k];
    r.times.push_back(r.truth.times[i]);
    r.relative_error.push_back(sp.relative_error[k]);
    r.h_true.push_back(system.energy(r.truth.states[i]));
    if (i < r.reconstructed.size()) {
      const double h = model.eval(r.reconstructed.states[i].values());
      r.h_tilde_aligned.push_back(h + align.offset);
      r.delta_h_tilde.push_back(h - h0);
    } else {
      r.h_tilde_aligned.push_back(std::numeric_limits<double>::quiet_NaN());
      r.delta_h_tilde.push_back(std::numeric_limits<double>::quiet_NaN());
    }
  }
  if (learned.nonsp)
    r.nonsp = stage("simulate_nonsp", [&] { return compare(learned.nonsp->field(), cfg, r.truth, idx); });
  if (learned.no_filter_model)
    r.no_filter = stage("simulate_no_filter", [&] {
      return compare(reconstructed_system(*learned.no_filter_model).rhs, cfg, r.truth, idx);
    });
  r.timings.simulate = seconds_since(t0);

  if (model.basis().dim_v() >= learned.pairs.count())
    r.warnings.push_back("dim V = " + std::to_string(model.basis().dim_v()) +
                         " is not smaller than K = " + std::to_string(learned.pairs.count()));

  if (cfg.diagnostics) {
    t0 = Clock::now();
    r.diagnostics = stage("diagnostics", [&] {
      DiagnosticsReport d;
      const TotalDegreeBasis& basis = model.basis();
      d.a_minus_i_norm = a_deviation(learned.pairs, basis, 0, cfg.threads);
      d.best_approx_error = best_approx_error(gradient_field(system), basis, cfg.degree + 3);
      d.alignment_error = align.error;
      d.alignment_offset = align.offset;
      const std::uint64_t eval_seed = CounterRng(cfg.seed).split(streams::kEvaluation).next();
      d.symplectic_defect = symplectic_defect(recon.rhs, basis.domain(), 200, eval_seed);
      if (learned.nonsp)
        d.nonsp_symplectic_defect =
            symplectic_defect(learned.nonsp->field(), basis.domain(), 200, eval_seed);
      d.truncation_level = default_truncation_level(learned.pairs);
      d.kn_uniform = kn_estimate(basis, cfg.degree + 2, true);
      d.kn_empirical = kn_estimate_on_points(basis, learned.pairs.states);
      d.tau_bound = learned.pairs.tau_bound;
      return d;
    });
    r.stability = check_stability(r.diagnostics->kn_uniform, learned.pairs.count(),
                                  cfg.stability_r, model.basis().dim_v());
    r.timings.diagnostics = seconds_since(t0);
  }
  r.model = std::move(learned.model);
  r.pairs = std::move(learned.pairs);
  return r;
}

ExperimentReport run_nonsp_comparison(ExperimentConfig cfg) {
  cfg.baseline_nonsp = true;
  return run_experiment(cfg);
}

nlohmann::ordered_json ExperimentReport::summary() const {
  nlohmann::ordered_json j;
  j["system"] = config.system;
  j["config_hash"] = config.hash();
  j["config"] = config.to_json();
  j["pair_count"] = pairs.count();
  j["pairs_hash"] = model ? model->pairs_hash : std::string();
  j["dropped_bursts"] = dropped_bursts;
  j["exited_bursts"] = exited_bursts;
  if (model) {
    j["dim_w"] = model->basis().dim_w();
    j["dim_v"] = model->basis().dim_v();
    const auto& s = model->solver_report();
    j["solver"] = {{"rank", s.rank}, {"eig_min", s.eig_min}, {"eig_max", s.eig_max},
                   {"residual", s.residual}};
  }
  j["samples"] = truth.size();
  j["final_time"] = truth.size() ? truth.times.back() : 0.0;
  j["final_relative_error"] =
      relative_error.empty() ? nlohmann::ordered_json(nullptr) : finite_or_null(relative_error.back());
  j["time_averaged_relative_error"] = finite_or_null(mean_relative_error);
  j["max_abs_delta_h"] = finite_or_null(sup_delta_h);
  j["alignment_offset"] = alignment_offset;
  j["diverged"] = diverged;
  if (diverged) j["diverged_time"] = diverged_time;
  if (diagnostics) {
    const auto& d = *diagnostics;
    nlohmann::ordered_json dj;
    dj["a_minus_i_norm"] = d.a_minus_i_norm;
    dj["best_approx_error"] = d.best_approx_error;
    dj["alignment_error"] = d.alignment_error;
    dj["symplectic_defect"] = d.symplectic_defect;
    if (d.nonsp_symplectic_defect) dj["nonsp_symplectic_defect"] = *d.nonsp_symplectic_defect;
    dj["truncation_level"] = d.truncation_level;
    dj["kn_uniform"] = d.kn_uniform;
    dj["kn_empirical"] = d.kn_empirical;
    if (d.tau_bound) dj["tau_bound"] = *d.tau_bound;
    j["diagnostics"] = dj;
  }
  if (stability) {
    const auto& s = *stability;
    j["stability"] = {{"kn_estimate", s.kn_estimate},
                      {"sample_count", s.sample_count},
                      {"r", s.r},
                      {"lambda", s.lambda},
                      {"threshold", s.threshold},
                      {"satisfied", s.satisfied},
                      {"beta", s.beta_delta},
                      {"failure_probability_bound", s.failure_probability_bound}};
  }
  auto series_json = [](const ComparisonSeries& c) {
    nlohmann::ordered_json s;
    s["time_averaged_relative_error"] = finite_or_null(c.mean_error);
    s["final_relative_error"] = c.relative_error.empty() ? nlohmann::ordered_json(nullptr)
                                                         : finite_or_null(c.relative_error.back());
    s["diverged"] = c.diverged;
    if (c.diverged) s["diverged_time"] = c.diverged_time;
    return s;
  };
  if (nonsp) j["nonsp"] = series_json(*nonsp);
  if (no_filter) j["no_filter"] = series_json(*no_filter);
  j["warnings"] = warnings;
  return j;
}

// ---------------------------------------------------------------------------
// Convergence

std::vector<double> observed_orders(const std::vector<double>& steps,
                                    const std::vector<double>& errors) {
  if (steps.size() != errors.size()) throw ArgumentError("observed_orders: size mismatch");
  std::vector<double> orders;
  for (std::size_t i = 0; i + 1 < steps.size(); ++i)
    orders.push_back(std::log2(errors[i] / errors[i + 1]) / std::log2(steps[i] / steps[i + 1]));
  return orders;
}

ConvergenceStudy run_convergence_study(const HamiltonianModel& model, const StateVector& u0,
                                       double horizon, std::vector<double> steps) {
  if (steps.empty()) throw ConfigError("convergence study needs at least one step");
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (!(steps[i] > 0.0)) throw ConfigError("steps must be positive");
    if (i > 0 && !(steps[i] < steps[i - 1])) throw ConfigError("steps must be strictly decreasing");
  }
  if (!(horizon > 0.0)) throw ConfigError("convergence study needs a positive horizon");
  const HamiltonianSystem recon = reconstructed_system(model);
  const double h0 = model.eval(u0.values());
  ConvergenceStudy study;
  study.steps = steps;
  for (double tau : steps) {
    const Trajectory traj = stage("simulate", [&] { return integrate(recon.rhs, u0, tau, horizon); });
    std::vector<double> dh(traj.size());
    for (std::size_t i = 0; i < traj.size(); ++i) dh[i] = model.eval(traj.states[i].values()) - h0;
    double linf = 0.0, l2 = 0.0, tv = 0.0, inc = 0.0;
    for (std::size_t i = 0; i < dh.size(); ++i) {
      linf = std::max(linf, std::abs(dh[i]));
      if (i > 0) {
        const double dt = traj.times[i] - traj.times[i - 1];
        l2 += 0.5 * dt * (dh[i] * dh[i] + dh[i - 1] * dh[i - 1]);
        tv += std::abs(dh[i] - dh[i - 1]);
        inc = std::max(inc, std::abs(dh[i] - dh[i - 1]));
      }
    }
    study.linf.push_back(linf);
    study.l2.push_back(std::sqrt(l2));
    study.total_variation.push_back(tv);
    study.max_increment.push_back(inc);
  }
  study.order_linf = observed_orders(study.steps, study.linf);
  study.order_l2 = observed_orders(study.steps, study.l2);
  study.order_total_variation = observed_orders(study.steps, study.total_variation);
  study.order_max_increment = observed_orders(study.steps, study.max_increment);
  return study;
}

ConvergenceStudy run_convergence_study(const ExperimentConfig& cfg, std::vector<double> steps) {
  const LearnedSystem learned = learn(cfg);
  return run_convergence_study(*learned.model, StateVector(cfg.test_initial_state), cfg.horizon,
                               std::move(steps));
}

nlohmann::ordered_json ConvergenceStudy::to_json() const {
  nlohmann::ordered_json j;
  auto arr = [](const std::vector<double>& v) {
    nlohmann::ordered_json a = nlohmann::ordered_json::array();
    for (double x : v) a.push_back(finite_or_null(x));
    return a;
  };
  j["steps"] = arr(steps);
  j["linf"] = arr(linf);
  j["l2"] = arr(l2);
  j["total_variation"] = arr(total_variation);
  j["max_increment"] = arr(max_increment);
  j["order_linf"] = arr(order_linf);
  j["order_l2"] = arr(order_l2);
  j["order_total_variation"] = arr(order_total_variation);
  j["order_max_increment"] = arr(order_max_increment);
  return j;
}

// ---------------------------------------------------------------------------
// Output files

namespace {

// Writes every file under a temporary name and renames once all succeeded;
// on failure nothing is left behind.
class OutputSet {
 public:
  explicit OutputSet(std::filesystem::path dir) : dir_(std::move(dir)) {}
  ~OutputSet() {
    if (committed_) return;
    std::error_code ec;
    for (const auto& p : temps_) std::filesystem::remove(p, ec);
  }

  template <class Writer>
  void add(const std::string& name, Writer&& writer) {
    const auto final_path = dir_ / name;
    const auto tmp = dir_ / (name + ".tmp");
    temps_.push_back(tmp);
    finals_.push_back(final_path);
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw IoError("cannot open " + tmp.string() + " for writing");
    writer(os);
    os.close();
    if (!os) throw IoError("write failed: " + tmp.string());
  }

  std::vector<std::filesystem::path> commit() {
    for (std::size_t i = 0; i < temps_.size(); ++i) {
      std::error_code ec;
      std::filesystem::rename(temps_[i], finals_[i], ec);
      if (ec) {
        std::error_code ignore;
        for (std::size_t r = 0; r < i; ++r) std::filesystem::remove(finals_[r], ignore);
        throw IoError("cannot rename to " + finals_[i].string() + ": " + ec.message());
      }
    }
    committed_ = true;
    return finals_;
  }

 private:
  std::filesystem::path dir_;
  std::vector<std::filesystem::path> temps_, finals_;
  bool committed_ = false;
};

void prepare_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir))
    throw IoError("cannot create output directory " + dir.string());
}

void write_csv_row(std::ostream& os, const std::vector<double>& row) {
  for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << format_double(row[i]);
  os << '\n';
}

Trajectory strided(const Trajectory& t, const std::vector<double>& times) {
  Trajectory out;
  std::size_t j = 0;
  for (double time : times) {
    while (j < t.size() && t.times[j] < time) ++j;
    if (j >= t.size()) break;
    out.times.push_back(t.times[j]);
    out.states.push_back(t.states[j]);
  }
  return out;
}

}  // namespace

std::vector<std::filesystem::path> emit_outputs(const ExperimentReport& report,
                                                const std::filesystem::path& dir,
                                                const std::string& command) {
  prepare_dir(dir);
  const std::string prefix = command + "-" + report.config.system + "-" + report.config.hash();
  OutputSet out(dir);

  out.add(prefix + ".summary.json", [&](std::ostream& os) {
    auto j = report.summary();
    j["command"] = command;
    os << j.dump(2) << '\n';
  });

  out.add(prefix + ".series.csv", [&](std::ostream& os) {
    os << "time,relative_error,h_true,h_tilde_aligned,delta_h_tilde";
    if (report.nonsp) os << ",relative_error_nonsp";
    if (report.no_filter) os << ",relative_error_no_filter";
    os << '\n';
    for (std::size_t k = 0; k < report.times.size(); ++k) {
      std::vector<double> row{report.times[k], report.relative_error[k], report.h_true[k],
                              report.h_tilde_aligned[k], report.delta_h_tilde[k]};
      if (report.nonsp) row.push_back(report.nonsp->relative_error[k]);
      if (report.no_filter) row.push_back(report.no_filter->relative_error[k]);
      write_csv_row(os, row);
    }
  });

  out.add(prefix + ".trajectories.csv", [&](std::ostream& os) {
    std::vector<Trajectory> trajs{strided(report.truth, report.times),
                                  strided(report.reconstructed, report.times)};
    std::vector<std::size_t> ids{0, 1};
    if (report.nonsp) {
      trajs.push_back(strided(report.nonsp->trajectory, report.times));
      ids.push_back(2);
    }
    if (report.no_filter) {
      trajs.push_back(strided(report.no_filter->trajectory, report.times));
      ids.push_back(3);
    }
    if (trajs.front().size() == 0) {
      const auto cols = trajectory_columns(builtin_system(report.config.system).dim_d, false);
      for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
      os << '\n';
      return;
    }
    write_trajectories(os, trajs, ids);
  });

  if (report.model)
    out.add(prefix + ".model.json",
            [&](std::ostream& os) { os << model_to_json(*report.model).dump(2) << '\n'; });
  if (report.pairs.count() > 0)
    out.add(prefix + ".pairs.csv", [&](std::ostream& os) { write_pairs(os, report.pairs); });
  return out.commit();
}

std::vector<std::filesystem::path> emit_convergence(const ConvergenceStudy& study,
                                                    const ExperimentConfig& cfg,
                                                    const std::filesystem::path& dir) {
  prepare_dir(dir);
  const std::string prefix = "converge-" + cfg.system + "-" + cfg.hash();
  OutputSet out(dir);
  out.add(prefix + ".summary.json", [&](std::ostream& os) {
    nlohmann::ordered_json j;
    j["system"] = cfg.system;
    j["config_hash"] = cfg.hash();
    j["config"] = cfg.to_json();
    j["study"] = study.to_json();
    os << j.dump(2) << '\n';
  });
  out.add(prefix + ".table.csv", [&](std::ostream& os) {
    os << "step,linf,order_linf,l2,order_l2,total_variation,order_total_variation,"
          "max_increment,order_max_increment\n";
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = 0; i < study.steps.size(); ++i) {
      auto order = [&](const std::vector<double>& o) { return i == 0 ? nan : o[i - 1]; };
      write_csv_row(os, {study.steps[i], study.linf[i], order(study.order_linf), study.l2[i],
                         order(study.order_l2), study.total_variation[i],
                         order(study.order_total_variation), study.max_increment[i],
                         order(study.order_max_increment)});
    }
  });
  return out.commit();
}

}  // namespace hamlearn
