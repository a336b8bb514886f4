#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "hamlearn/data_pipeline.hpp"
#include "hamlearn/learner.hpp"
#include "hamlearn/poly_basis.hpp"

namespace hamlearn {

// Shortest decimal text that round-trips to the same double.
std::string format_double(double v);

// Column names of the delimited trajectory format:
// trajectory_id,time,p1..pd,q1..qd[,dp1..dpd,dq1..dqd]
std::vector<std::string> trajectory_columns(int dim_d, bool with_derivatives);

void write_trajectories(std::ostream& os, std::span<const Trajectory> trajectories,
                        std::span<const std::size_t> ids = {});
void write_trajectories(const std::filesystem::path& path, std::span<const Trajectory> trajectories,
                        std::span<const std::size_t> ids = {});

void write_pairs(std::ostream& os, const DataPairSet& pairs);
void write_pairs(const std::filesystem::path& path, const DataPairSet& pairs);

// Reads either flavour; derivative columns are required for pairs.
struct TrajectoryFile {
  int dim_d = 0;
  std::vector<std::size_t> ids;
  std::vector<Trajectory> trajectories;
};
TrajectoryFile read_trajectories(std::istream& is);
TrajectoryFile read_trajectories(const std::filesystem::path& path);
DataPairSet read_pairs(std::istream& is);
DataPairSet read_pairs(const std::filesystem::path& path);

nlohmann::ordered_json to_json(const BasisDescriptor& d);
BasisDescriptor basis_descriptor_from_json(const nlohmann::ordered_json& j);

nlohmann::ordered_json model_to_json(const HamiltonianModel& model);
HamiltonianModel model_from_json(const nlohmann::ordered_json& j);
void save_model(const HamiltonianModel& model, const std::filesystem::path& path);
HamiltonianModel load_model(const std::filesystem::path& path);

std::string hex64(std::uint64_t v);
std::uint64_t fnv1a(std::span<const unsigned char> bytes, std::uint64_t h = 0xcbf29ce484222325ULL);

}  // namespace hamlearn
