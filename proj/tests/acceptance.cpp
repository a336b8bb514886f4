// Acceptance checks. Usage: hamlearn_acceptance [criterion ...]; with no
// arguments every criterion runs. Prints one PASS/FAIL line per criterion and
// exits nonzero if any failed.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "hamlearn/data_pipeline.hpp"
#include "hamlearn/experiment.hpp"
#include "hamlearn/io.hpp"
#include "hamlearn/learner.hpp"
#include "hamlearn/poly_basis.hpp"
#include "hamlearn/rng.hpp"
#include "hamlearn/systems.hpp"

using namespace hamlearn;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// Results are independent of the thread count, so heavy runs use every core.
unsigned worker_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string list(const std::vector<double>& v, const char* f = "%.3g") {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(f, v[i]);
  return s + "]";
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

DataPairSet exact_uniform_pairs(const HamiltonianSystem& sys, const DomainBox& box,
                                std::size_t count, std::uint64_t seed) {
  DataPairSet pairs;
  pairs.dim_d = sys.dim_d;
  CounterRng rng(seed);
  std::vector<double> x(box.dims());
  for (std::size_t k = 0; k < count; ++k) {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.uniform(box.lower()[i], box.upper()[i]);
    pairs.push_back(k, 0.0, x, sys.rhs_at(x));
  }
  return pairs;
}

// 1. Exact recovery of the harmonic oscillator.
Outcome exact_recovery() {
  constexpr double kTol = 1e-8;
  constexpr double kSeconds = 1.0;
  Stopwatch sw;
  const auto osc = harmonic_oscillator();
  const TotalDegreeBasis basis(2, osc.default_domain);
  const auto pairs = exact_uniform_pairs(osc, osc.default_domain, 200, 1);
  const auto model = fit_hamiltonian(pairs, basis);

  double sup = 0.0;
  std::vector<double> grid;
  const int g = 41;
  for (int i = 0; i < g; ++i) {
    for (int j = 0; j < g; ++j) {
      const std::vector<double> x{-1.0 + 2.0 * i / (g - 1), -1.0 + 2.0 * j / (g - 1)};
      grid.insert(grid.end(), x.begin(), x.end());
      const auto gh = model.grad(x);
      sup = std::max({sup, std::abs(gh[0] - x[0]), std::abs(gh[1] - x[1])});
    }
  }
  const auto align = alignment_error(model, osc.hamiltonian, grid);
  const double t = sw.seconds();
  return {sup < kTol && align.error < kTol && t < kSeconds,
          "sup |grad H~ - grad H| = " + fmt("%.2e", sup) + ", alignment = " +
              fmt("%.2e", align.error) + " (< 1e-8), " + fmt("%.3f", t) + " s (< 1 s)"};
}

// 2. Fourth-order conservation of the learned Hamiltonian under RK4.
Outcome conservation_order() {
  constexpr double kLo = 3.5, kHi = 4.2;
  constexpr double kReference = 2.7493e-7;
  constexpr double kSeconds = 120.0;
  Stopwatch sw;
  auto cfg = preset("pendulum");
  cfg.threads = worker_threads();
  const auto study = run_convergence_study(cfg, {8e-3, 4e-3, 2e-3, 1e-3, 5e-4});
  const double t = sw.seconds();
  bool orders_ok = true;
  for (double o : study.order_linf) orders_ok = orders_ok && o >= kLo && o <= kHi;
  const double first = study.linf.front();
  const bool value_ok = first >= kReference / 10.0 && first <= kReference * 10.0;
  return {orders_ok && value_ok && t < kSeconds,
          "Linf orders " + list(study.order_linf, "%.2f") + " (in [3.5, 4.2]), Linf(8e-3) = " +
              fmt("%.3e", first) + " (within 10x of 2.7493e-7), " + fmt("%.1f", t) + " s"};
}

// 3. Round-off-level conservation on every preset.
Outcome roundoff_conservation() {
  constexpr double kTol = 1e-6;
  constexpr double kSeconds = 300.0;
  Stopwatch sw;
  bool ok = true;
  std::string detail;
  for (const auto& name : preset_names()) {
    auto cfg = preset(name);
    cfg.eval_step = 2.5e-4;
    cfg.diagnostics = false;
    cfg.threads = worker_threads();
    const auto r = run_experiment(cfg);
    const double sup = r.diverged ? INFINITY : r.sup_delta_h;
    ok = ok && sup <= kTol;
    detail += name + " " + fmt("%.2e", sup) + "; ";
  }
  const double t = sw.seconds();
  return {ok && t < kSeconds, "sup|dH~| " + detail + "(<= 1e-6), " + fmt("%.1f", t) + " s"};
}

// 4. Second-order finite differences.
Outcome finite_difference_order() {
  constexpr double kLo = 1.9, kHi = 2.1;
  const std::vector<double> steps{0.1, 0.05, 0.025};
  std::vector<double> errors;
  for (double dt : steps) {
    Trajectory traj;
    const int n = static_cast<int>(std::lround(2.0 / dt));
    for (int k = 0; k <= n; ++k) {
      const double time = k * dt;
      traj.times.push_back(time);
      traj.states.push_back(StateVector{std::sin(time), std::cos(time)});
    }
    const auto d = central_diff(traj);
    double worst = 0.0;
    for (std::size_t k = 0; k < traj.size(); ++k) {
      worst = std::max(worst, std::abs(d[k][0] - std::cos(traj.times[k])));
      worst = std::max(worst, std::abs(d[k][1] + std::sin(traj.times[k])));
    }
    errors.push_back(worst);
  }
  const auto orders = observed_orders(steps, errors);
  bool ok = true;
  for (double o : orders) ok = ok && o >= kLo && o <= kHi;
  return {ok, "max errors " + list(errors) + ", orders " + list(orders, "%.3f") + " (in [1.9, 2.1])"};
}

// 5. The de-noising filter helps on average.
Outcome denoising_benefit() {
  constexpr int kSeeds = 5;
  std::vector<double> with, without;
  for (int s = 1; s <= kSeeds; ++s) {
    auto cfg = preset("pendulum");
    cfg.seed = static_cast<std::uint64_t>(s);
    cfg.baseline_no_filter = true;
    cfg.diagnostics = false;
    cfg.threads = worker_threads();
    const auto r = run_experiment(cfg);
    with.push_back(r.time_averaged_relative_error());
    without.push_back(r.no_filter->time_averaged_error());
  }
  const double mw = std::accumulate(with.begin(), with.end(), 0.0) / kSeeds;
  const double mo = std::accumulate(without.begin(), without.end(), 0.0) / kSeeds;
  return {mw <= mo, "mean time-averaged error filtered " + fmt("%.4f", mw) + " <= unfiltered " +
                        fmt("%.4f", mo) + "; per seed " + list(with) + " vs " + list(without)};
}

// 6. Symplecticity gap between the SP and the component-wise fit.
Outcome symplecticity_gap() {
  constexpr double kSpMax = 1e-4, kNonSpMin = 1e-2;
  auto cfg = preset("pendulum");
  cfg.baseline_nonsp = true;
  const auto learned = learn(cfg);
  const auto box = cfg.domain();
  const std::uint64_t seed = CounterRng(cfg.seed).split(streams::kEvaluation).next();
  const double sp = symplectic_defect(reconstructed_system(*learned.model).rhs, box, 200, seed);
  const double nonsp = symplectic_defect(learned.nonsp->field(), box, 200, seed);
  return {sp <= kSpMax && nonsp >= kNonSpMin,
          "defect SP " + fmt("%.2e", sp) + " (<= 1e-4), non-SP " + fmt("%.2e", nonsp) + " (>= 1e-2)"};
}

// 7. Stability constant, threshold arithmetic and the A -> I trend.
Outcome stability_diagnostics() {
  constexpr double kLambda = 0.0540988311;
  bool ok = true;
  std::string detail;

  const double lambda = check_stability(1.0, 100, 1.0).lambda;
  const bool lambda_ok = std::abs(lambda - kLambda) < 5e-11;
  ok = ok && lambda_ok;
  detail += "lambda(1) = " + fmt("%.10f", lambda) + (lambda_ok ? "" : " MISMATCH") + "; ";

  bool arith_ok = true;
  for (double r : {0.5, 1.0, 2.0}) {
    for (std::size_t k : {100u, 1000u, 100000u}) {
      for (double kn : {2.0, 40.0, 900.0}) {
        const auto s = check_stability(kn, k, r, 9);
        const long double lam = (std::log(27.0L / 8.0L) - 1.0L) / (2.0L * (1.0L + r));
        const long double thr = lam * k / std::log(static_cast<long double>(k));
        const long double beta = 1.5L * std::log(1.5L) - 0.5L;
        const long double prob = 18.0L * std::exp(-beta * k / kn);
        arith_ok = arith_ok && std::abs(s.lambda - lam) <= 1e-15 &&
                   std::abs(s.threshold - thr) <= 1e-12 * thr &&
                   s.satisfied == (kn <= thr) &&
                   std::abs(s.failure_probability_bound - prob) <= 1e-12 * prob + 1e-300;
      }
    }
  }
  ok = ok && arith_ok;
  detail += std::string("threshold arithmetic ") + (arith_ok ? "matches" : "MISMATCH") + "; ";

  const auto osc = harmonic_oscillator();
  const TotalDegreeBasis basis(3, DomainBox::cube(2, -1, 1));
  std::vector<double> medians;
  for (std::size_t k : {1000u, 10000u, 100000u}) {
    std::vector<double> dev;
    for (std::uint64_t s = 1; s <= 3; ++s)
      dev.push_back(a_deviation(exact_uniform_pairs(osc, basis.domain(), k, 100 + s), basis));
    medians.push_back(median(dev));
  }
  const bool trend_ok = medians[1] <= medians[0] && medians[2] <= medians[1];
  ok = ok && trend_ok;
  detail += "median |A - I| at K = 1e3, 1e4, 1e5: " + list(medians) + " (nonincreasing)";
  return {ok, detail};
}

// 8. Monte-Carlo gradient error: decreasing in K and above the best approximation.
Outcome error_bound_behavior() {
  constexpr int kSeeds = 10;
  constexpr double kFloor = 0.9;
  const auto pend = builtin_system("pendulum");
  const TotalDegreeBasis basis(3, pend.default_domain);
  const auto grad = gradient_field(pend);
  const double best = best_approx_error(grad, basis, 12);
  std::vector<double> means;
  for (std::size_t k : {500u, 5000u}) {
    double sum = 0.0;
    for (int s = 1; s <= kSeeds; ++s) {
      const auto model = fit_hamiltonian(
          exact_uniform_pairs(pend, pend.default_domain, k, 1000 * k + s), basis);
      const VectorField learned = [&model](std::span<const double> x, std::span<double> out) {
        model.grad(x, out);
      };
      const double e = gradient_l2_error(grad, learned, pend.default_domain, 12);
      sum += e * e;
    }
    means.push_back(sum / kSeeds);
  }
  const double floor = kFloor * best * best;
  const bool ok = means[1] <= means[0] && means[0] >= floor && means[1] >= floor;
  return {ok, "mean |grad H - grad H~|^2 at K = 500, 5000: " + list(means, "%.5g") +
                  " (nonincreasing, >= 0.9 * best^2 = " + fmt("%.5g", floor) + ")"};
}

// 9. Desk-scale Henon-Heiles.
Outcome henon_heiles() {
  constexpr double kRel = 0.05, kDh = 1e-6;
  auto cfg = preset("henon_heiles");
  cfg.eval_step = 2.5e-4;
  cfg.diagnostics = false;
  const auto r = run_experiment(cfg);
  const double e10 = r.relative_error_at(10.0);
  return {!r.diverged && e10 < kRel && r.sup_delta_h <= kDh,
          "relative error at t = 10: " + fmt("%.3e", e10) + " (< 0.05), sup|dH~| = " +
              fmt("%.2e", r.sup_delta_h) + " (<= 1e-6)"};
}

std::map<std::string, std::string> read_dir(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::ifstream is(entry.path(), std::ios::binary);
    files[entry.path().filename().string()] =
        std::string(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>());
  }
  return files;
}

// 10. Bitwise determinism across runs and thread counts.
Outcome determinism() {
  const auto root = fs::temp_directory_path() / "hamlearn_acceptance_determinism";
  bool ok = true;
  std::string detail;
  for (const std::string name : {"pendulum", "exp_quartic", "henon_heiles", "cherry"}) {
    std::vector<std::map<std::string, std::string>> runs;
    for (unsigned threads : {1u, 1u, 4u}) {
      auto cfg = preset(name);
      cfg.threads = threads;
      cfg.baseline_nonsp = true;
      const auto dir = root / (name + "-" + std::to_string(runs.size()));
      fs::remove_all(dir);
      emit_outputs(run_experiment(cfg), dir);
      runs.push_back(read_dir(dir));
      fs::remove_all(dir);
    }
    const bool same = runs[0].size() == 5 && runs[0] == runs[1] && runs[0] == runs[2];
    ok = ok && same;
    detail += name + (same ? " identical" : " DIFFERS") + "; ";
  }
  fs::remove_all(root);
  return {ok, detail + "(threads 1, 1, 4)"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"1", exact_recovery},        {"2", conservation_order},      {"3", roundoff_conservation},
      {"4", finite_difference_order}, {"5", denoising_benefit},     {"6", symplecticity_gap},
      {"7", stability_diagnostics}, {"8", error_bound_behavior},    {"9", henon_heiles},
      {"10", determinism}};

  std::vector<std::string> wanted(argv + 1, argv + argc);
  int failures = 0;
  for (const auto& [id, check] : criteria) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), id) == wanted.end()) continue;
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("criterion %s: %s  %s\n", id.c_str(), o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
