#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <sstream>

#include "hamlearn/errors.hpp"
#include "hamlearn/io.hpp"
#include "hamlearn/rng.hpp"

using namespace hamlearn;

namespace {

std::vector<Trajectory> random_trajectories(std::uint64_t seed) {
  CounterRng rng(seed);
  std::vector<Trajectory> out(3);
  for (auto& t : out) {
    for (int k = 0; k < 7; ++k) {
      t.times.push_back(0.1 * k + 0.01 * rng.uniform());
      t.states.push_back(StateVector{rng.uniform(-1e3, 1e3), rng.uniform(-1e-7, 1e-7),
                                     rng.uniform(), std::ldexp(rng.uniform(), -300)});
    }
  }
  return out;
}

DataPairSet random_pairs(std::uint64_t seed) {
  DataPairSet pairs;
  pairs.dim_d = 1;
  CounterRng rng(seed);
  for (int k = 0; k < 25; ++k) {
    const std::vector<double> x{rng.uniform(-3, 3), rng.uniform(-3, 3)};
    const std::vector<double> v{rng.uniform(-1e5, 1e5), 1.0 / 3.0 + rng.uniform()};
    pairs.push_back(static_cast<std::size_t>(k / 5), 0.02 * k, x, v);
  }
  return pairs;
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("doubles format to shortest round-trip text") {
  for (const double v : {0.1, 1.0 / 3.0, -2.5e-310, 1e300, 0.0, 123456789.125}) {
    CHECK(std::strtod(format_double(v).c_str(), nullptr) == v);
  }
  CHECK(format_double(0.5) == "0.5");
}

TEST_CASE("trajectory round trip is bitwise") {
  const auto src = random_trajectories(3);
  std::stringstream ss;
  write_trajectories(ss, src);
  const auto back = read_trajectories(ss);
  CHECK(back.dim_d == 2);
  REQUIRE(back.trajectories.size() == src.size());
  for (std::size_t i = 0; i < src.size(); ++i) {
    CHECK(back.ids[i] == i);
    CHECK(back.trajectories[i].times == src[i].times);
    CHECK(back.trajectories[i].states == src[i].states);
  }
}

TEST_CASE("trajectory header lists the canonical columns") {
  const auto cols = trajectory_columns(2, true);
  const std::vector<std::string> expected{"trajectory_id", "time", "p1", "p2", "q1", "q2",
                                          "dp1", "dp2", "dq1", "dq2"};
  CHECK(cols == expected);
  std::stringstream ss;
  write_trajectories(ss, random_trajectories(1));
  std::string header;
  std::getline(ss, header);
  CHECK(header == "trajectory_id,time,p1,p2,q1,q2");
}

TEST_CASE("pair round trip is bitwise") {
  const auto src = random_pairs(5);
  std::stringstream ss;
  write_pairs(ss, src);
  const auto back = read_pairs(ss);
  CHECK(back.dim_d == 1);
  CHECK(back.states == src.states);
  CHECK(back.derivatives == src.derivatives);
  CHECK(back.trajectory_ids == src.trajectory_ids);
  CHECK(back.times == src.times);
  CHECK(back.content_hash() == src.content_hash());
}

TEST_CASE("malformed files are rejected") {
  const char* bad[] = {
      "",
      "trajectory_id,time,p1\n",
      "trajectory_id,time,p1,q1\n0,0.0,1.0\n",
      "trajectory_id,time,p1,q1\n0,0.0,1.0,abc\n",
      "trajectory_id,time,q1,p1\n0,0.0,1.0,2.0\n",
      "trajectory_id,time,p1,q1\n0,0.0,1.0,2.0,3.0\n",
  };
  for (const char* text : bad) {
    std::stringstream ss(text);
    CHECK_THROWS_AS(read_trajectories(ss), IoError);
  }
  std::stringstream no_derivs("trajectory_id,time,p1,q1\n0,0.0,1.0,2.0\n");
  CHECK_THROWS_AS(read_pairs(no_derivs), IoError);
  CHECK_THROWS_AS(read_trajectories(std::filesystem::path("/nonexistent/file.csv")), IoError);
}

TEST_CASE("basis descriptor json round trip") {
  const TotalDegreeBasis basis(4, DomainBox({-1.0, 0.25}, {2.0, 0.75}), DomainPolicy::kClamp);
  const auto j = to_json(basis.descriptor());
  CHECK(j["ordering"] == "graded-lex");
  const auto d = basis_descriptor_from_json(j);
  CHECK(d.degree == 4);
  CHECK(d.dims == 2);
  CHECK(d.lower == basis.domain().lower());
  CHECK(d.upper == basis.domain().upper());
  CHECK(d.policy == DomainPolicy::kClamp);
}

TEST_CASE("saved models reload and evaluate bitwise") {
  const TotalDegreeBasis basis(3, DomainBox::cube(2, -3.0, 3.0));
  const auto pairs = random_pairs(9);
  const auto model = fit_hamiltonian(pairs, basis);
  const auto path = std::filesystem::temp_directory_path() / "hamlearn_io_model.json";
  save_model(model, path);
  const auto back = load_model(path);
  std::filesystem::remove(path);

  CHECK(back.coefficients() == model.coefficients());
  CHECK(back.pairs_hash == model.pairs_hash);
  CHECK(back.pair_count == model.pair_count);
  CHECK(back.solver_report().rank == model.solver_report().rank);
  CounterRng rng(2);
  for (int k = 0; k < 20; ++k) {
    const std::vector<double> x{rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)};
    CHECK(back.eval(x) == model.eval(x));
    CHECK(back.grad(x) == model.grad(x));
  }
  const auto j = model_to_json(model);
  CHECK(j["format"] == "hamlearn-model");
  CHECK(j["coefficients"].size() == basis.dim_v());
}

TEST_CASE("model json is validated") {
  nlohmann::ordered_json j = {{"format", "something-else"}};
  CHECK_THROWS_AS(model_from_json(j), IoError);
  CHECK_THROWS_AS(load_model("/nonexistent/model.json"), IoError);
}

TEST_CASE("hash helpers") {
  CHECK(hex64(0xabcULL) == "0000000000000abc");
  const unsigned char empty[1] = {0};
  CHECK(fnv1a(std::span<const unsigned char>(empty, 0)) == 0xcbf29ce484222325ULL);
  const unsigned char a[1] = {'a'};
  CHECK(fnv1a(a) == 0xaf63dc4c8601ec8cULL);
}

}  // TEST_SUITE
