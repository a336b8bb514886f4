#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include "hamlearn/errors.hpp"
#include "hamlearn/experiment.hpp"
#include "hamlearn/io.hpp"

using namespace hamlearn;
namespace fs = std::filesystem;

namespace {

ExperimentConfig tiny_config() {
  auto c = preset("henon_heiles");
  c.trajectories = 60;
  c.horizon = 0.5;
  c.eval_step = 1e-3;
  c.fine_ratio = 20;
  c.series_stride = 5;
  return c;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("hamlearn_test_" + name);
  fs::remove_all(dir);
  return dir;
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

}  // namespace

TEST_SUITE("experiment") {

TEST_CASE("defaults are the pendulum preset") {
  const ExperimentConfig d;
  CHECK(d.to_json() == preset("pendulum").to_json());
  CHECK(d.trajectories == 500);
  CHECK(d.steps_per_burst == 40);
  CHECK(d.degree == 6);
  CHECK(d.denoise_degree == 5);
  CHECK(d.noise_amplitude == 0.08);
  CHECK(d.test_initial_state == std::vector<double>{-3.876, -1.193});
  for (const auto& name : preset_names()) CHECK_NOTHROW(preset(name).validate());
  CHECK_THROWS_AS(preset("nope"), ConfigError);
}

TEST_CASE("config json round trip and validation") {
  const auto c = tiny_config();
  const auto back = ExperimentConfig::from_json(nlohmann::json::parse(c.to_json().dump()));
  CHECK(back.to_json() == c.to_json());
  CHECK(back.hash() == c.hash());

  CHECK_THROWS_AS(ExperimentConfig::from_json({{"bogus", 1}}), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json({{"degree", "six"}}), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json({{"degree", 0}}), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json({{"system", "nope"}}), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json({{"system", "cherry"}, {"test_initial_state", {1.0, 2.0}}}),
                  ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json({{"derivative_method", "spline"}}), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json(nlohmann::json::array()), ConfigError);

  const auto hh = ExperimentConfig::from_json({{"preset", "henon_heiles"}, {"seed", 7}});
  CHECK(hh.system == "henon_heiles");
  CHECK(hh.degree == 3);
  CHECK(hh.seed == 7);
}

TEST_CASE("config hash ignores threads and output directory but not the seed") {
  auto a = tiny_config();
  auto b = a;
  b.threads = 8;
  b.output_dir = "elsewhere";
  CHECK(a.hash() == b.hash());
  b.seed = a.seed + 1;
  CHECK(a.hash() != b.hash());
  CHECK(a.hash().size() == 16);
}

TEST_CASE("zero horizon gives a single t = 0 row") {
  auto c = tiny_config();
  c.horizon = 0.0;
  const auto r = run_experiment(c);
  REQUIRE(r.times.size() == 1);
  CHECK(r.times[0] == 0.0);
  CHECK(r.relative_error[0] == 0.0);
  CHECK(r.truth.size() == 1);
  CHECK(r.mean_relative_error == 0.0);
}

TEST_CASE("report series are consistent") {
  const auto r = run_experiment(tiny_config());
  CHECK_FALSE(r.diverged);
  const std::size_t n = r.times.size();
  CHECK(n > 2);
  CHECK(r.relative_error.size() == n);
  CHECK(r.h_true.size() == n);
  CHECK(r.h_tilde_aligned.size() == n);
  CHECK(r.delta_h_tilde.size() == n);
  CHECK(r.times.back() == doctest::Approx(0.5));
  CHECK(r.relative_error_at(0.0) == 0.0);
  CHECK(r.relative_error_at(0.5) == doctest::Approx(r.relative_error.back()));
  CHECK(r.sup_delta_h < 1e-10);
  REQUIRE(r.model.has_value());
  CHECK(r.model->pair_count == r.pairs.count());
  REQUIRE(r.diagnostics.has_value());
  CHECK(r.diagnostics->symplectic_defect < 1e-4);
  const auto s = r.summary();
  CHECK(s["config"]["system"] == "henon_heiles");
  CHECK(s.contains("pairs_hash"));
}

TEST_CASE("outputs are deterministic across runs and thread counts") {
  auto c = tiny_config();
  c.baseline_nonsp = true;
  const auto d1 = scratch("det1"), d2 = scratch("det2");
  const auto files = emit_outputs(run_experiment(c), d1);
  CHECK(files.size() == 5);
  c.threads = 3;
  emit_outputs(run_experiment(c), d2);
  const auto a = read_dir(d1), b = read_dir(d2);
  CHECK(a.size() == 5);
  CHECK(a == b);
  for (const auto& [name, _] : a) CHECK(name.rfind("run-henon_heiles-" + c.hash(), 0) == 0);
  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST_CASE("seed changes the training provenance") {
  auto c = tiny_config();
  c.diagnostics = false;
  const auto a = run_experiment(c);
  c.seed += 1;
  const auto b = run_experiment(c);
  CHECK(a.model->pairs_hash != b.model->pairs_hash);
}

TEST_CASE("a failed emit leaves no partial files") {
  auto c = tiny_config();
  c.diagnostics = false;
  const auto report = run_experiment(c);
  const auto dir = scratch("fail");
  const std::string prefix = "run-henon_heiles-" + c.hash();
  // A non-empty directory where the last file should go makes the final rename fail.
  fs::create_directories(dir / (prefix + ".pairs.csv") / "blocker");
  CHECK_THROWS_AS(emit_outputs(report, dir), IoError);
  std::vector<std::string> left;
  for (const auto& e : fs::directory_iterator(dir)) left.push_back(e.path().filename().string());
  CHECK(left == std::vector<std::string>{prefix + ".pairs.csv"});
  fs::remove_all(dir);

  CHECK_THROWS_AS(emit_outputs(report, "/proc/hamlearn-not-writable"), IoError);
}

TEST_CASE("degenerate report writes header-only series") {
  ExperimentReport r;
  r.config = tiny_config();
  const auto dir = scratch("empty");
  emit_outputs(r, dir, "run");
  const auto files = read_dir(dir);
  const std::string prefix = "run-henon_heiles-" + r.config.hash();
  CHECK(files.at(prefix + ".series.csv") ==
        "time,relative_error,h_true,h_tilde_aligned,delta_h_tilde\n");
  CHECK(files.at(prefix + ".trajectories.csv") == "trajectory_id,time,p1,p2,q1,q2\n");
  fs::remove_all(dir);
}

TEST_CASE("stage failures are tagged") {
  auto c = tiny_config();
  c.degree = 12;
  c.trajectories = 2;
  c.restrict_to_box = true;
  c.domain_lower = {10, 10, 10, 10};
  c.domain_upper = {11, 11, 11, 11};
  try {
    run_experiment(c);
    FAIL("expected a stage error");
  } catch (const StageError& e) {
    CHECK_FALSE(e.stage_name.empty());
  }
}

TEST_CASE("trajectory labels do not affect the learned model") {
  auto c = tiny_config();
  const auto learned = learn(c);
  auto relabeled = learned.pairs;
  for (auto& id : relabeled.trajectory_ids) id = 1000 - id;
  const auto box = c.domain();
  const TotalDegreeBasis basis(c.degree, box, c.domain_policy);
  CHECK(fit_hamiltonian(relabeled, basis).coefficients() ==
        fit_hamiltonian(learned.pairs, basis).coefficients());
}

TEST_CASE("observed orders") {
  const auto o = observed_orders({0.1, 0.05, 0.025}, {1.6e-3, 1e-4, 6.25e-6});
  REQUIRE(o.size() == 2);
  CHECK(o[0] == doctest::Approx(4.0));
  CHECK(o[1] == doctest::Approx(4.0));
}

TEST_CASE("convergence study on an exactly recovered model") {
  const TotalDegreeBasis basis(2, DomainBox::cube(2, -1, 1));
  // H = (p^2 + q^2) / 2 = (P2(p) + P2(q)) / 3 + const.
  std::vector<double> coeffs(basis.dim_v(), 0.0);
  for (std::size_t j = 1; j <= basis.dim_v(); ++j) {
    const auto& a = basis.indices()[j].exponents;
    if ((a[0] == 2 && a[1] == 0) || (a[0] == 0 && a[1] == 2)) coeffs[j - 1] = 1.0 / 3.0;
  }
  const HamiltonianModel model(basis, coeffs);
  const auto study =
      run_convergence_study(model, StateVector{0.5, 0.25}, 10.0, {0.08, 0.04, 0.02, 0.01});
  REQUIRE(study.order_linf.size() == 3);
  for (double o : study.order_linf) CHECK(o >= 3.5);
  CHECK(study.linf.back() < 1e-10);
  CHECK(study.linf.back() < study.linf.front());
  CHECK_THROWS_AS(run_convergence_study(model, StateVector{0.5, 0.25}, 10.0, {0.01, 0.02}),
                  ConfigError);
}

}  // TEST_SUITE
