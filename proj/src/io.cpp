#include "hamlearn/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "hamlearn/errors.hpp"

namespace hamlearn {

namespace {

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    cells.push_back(cell);
  }
  return cells;
}

double parse_double(const std::string& s, std::size_t line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw IoError("line " + std::to_string(line) + ": cannot parse number '" + s + "'");
  return v;
}

std::size_t parse_index(const std::string& s, std::size_t line) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw IoError("line " + std::to_string(line) + ": cannot parse trajectory id '" + s + "'");
  return v;
}

void write_header(std::ostream& os, int dim_d, bool with_derivatives) {
  const auto cols = trajectory_columns(dim_d, with_derivatives);
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << '\n';
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  return os;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  return is;
}

struct Table {
  int dim_d = 0;
  bool with_derivatives = false;
  std::vector<std::vector<double>> rows;  // time, state, [derivative]
  std::vector<std::size_t> ids;
};

Table read_table(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw IoError("empty trajectory file");
  const auto header = split_row(line);
  if (header.size() < 4 || header[0] != "trajectory_id" || header[1] != "time")
    throw IoError("header must start with trajectory_id,time");
  const std::size_t rest = header.size() - 2;
  Table t;
  if (rest % 4 == 0 && header.size() > 2 + rest / 2 && header[2 + rest / 2] == "dp1") {
    t.with_derivatives = true;
    t.dim_d = static_cast<int>(rest / 4);
  } else if (rest % 2 == 0) {
    t.dim_d = static_cast<int>(rest / 2);
  } else {
    throw IoError("odd number of state columns");
  }
  if (header != trajectory_columns(t.dim_d, t.with_derivatives))
    throw IoError("unexpected column names in header");
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_row(line);
    if (cells.size() != header.size())
      throw IoError("line " + std::to_string(lineno) + ": expected " +
                    std::to_string(header.size()) + " columns, got " +
                    std::to_string(cells.size()));
    t.ids.push_back(parse_index(cells[0], lineno));
    std::vector<double> row(cells.size() - 1);
    for (std::size_t c = 1; c < cells.size(); ++c) row[c - 1] = parse_double(cells[c], lineno);
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::vector<std::string> trajectory_columns(int dim_d, bool with_derivatives) {
  std::vector<std::string> cols{"trajectory_id", "time"};
  for (const char* prefix : {"p", "q"})
    for (int i = 1; i <= dim_d; ++i) cols.push_back(prefix + std::to_string(i));
  if (with_derivatives)
    for (const char* prefix : {"dp", "dq"})
      for (int i = 1; i <= dim_d; ++i) cols.push_back(prefix + std::to_string(i));
  return cols;
}

void write_trajectories(std::ostream& os, std::span<const Trajectory> trajectories,
                        std::span<const std::size_t> ids) {
  if (!ids.empty() && ids.size() != trajectories.size())
    throw ArgumentError("write_trajectories: one id per trajectory required");
  int dim_d = 0;
  for (const auto& t : trajectories)
    if (t.size() > 0) {
      if (dim_d != 0 && t.dim_d() != dim_d)
        throw ArgumentError("write_trajectories: mixed dimensions");
      dim_d = t.dim_d();
    }
  if (dim_d == 0) throw ArgumentError("write_trajectories: nothing to write");
  write_header(os, dim_d, false);
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    const auto& t = trajectories[i];
    const std::size_t id = ids.empty() ? i : ids[i];
    for (std::size_t s = 0; s < t.size(); ++s) {
      os << id << ',' << format_double(t.times[s]);
      for (double v : t.states[s].values()) os << ',' << format_double(v);
      os << '\n';
    }
  }
  if (!os) throw IoError("write failed");
}

void write_trajectories(const std::filesystem::path& path, std::span<const Trajectory> trajectories,
                        std::span<const std::size_t> ids) {
  auto os = open_out(path);
  write_trajectories(os, trajectories, ids);
}

void write_pairs(std::ostream& os, const DataPairSet& pairs) {
  pairs.validate();
  write_header(os, pairs.dim_d, true);
  for (std::size_t k = 0; k < pairs.count(); ++k) {
    os << pairs.trajectory_ids[k] << ',' << format_double(pairs.times[k]);
    for (double v : pairs.state(k)) os << ',' << format_double(v);
    for (double v : pairs.derivative(k)) os << ',' << format_double(v);
    os << '\n';
  }
  if (!os) throw IoError("write failed");
}

void write_pairs(const std::filesystem::path& path, const DataPairSet& pairs) {
  auto os = open_out(path);
  write_pairs(os, pairs);
}

TrajectoryFile read_trajectories(std::istream& is) {
  const Table t = read_table(is);
  TrajectoryFile out;
  out.dim_d = t.dim_d;
  const std::size_t width = 2 * static_cast<std::size_t>(t.dim_d);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (out.ids.empty() || out.ids.back() != t.ids[r]) {
      out.ids.push_back(t.ids[r]);
      out.trajectories.emplace_back();
    }
    Trajectory& traj = out.trajectories.back();
    const double time = t.rows[r][0];
    if (!traj.times.empty() && !(time > traj.times.back()))
      throw IoError("trajectory " + std::to_string(t.ids[r]) + ": times not increasing");
    traj.times.push_back(time);
    traj.states.emplace_back(std::vector<double>(t.rows[r].begin() + 1,
                                                 t.rows[r].begin() + 1 + static_cast<long>(width)));
  }
  return out;
}

TrajectoryFile read_trajectories(const std::filesystem::path& path) {
  auto is = open_in(path);
  return read_trajectories(is);
}

DataPairSet read_pairs(std::istream& is) {
  const Table t = read_table(is);
  if (!t.with_derivatives) throw IoError("pair file lacks derivative columns");
  DataPairSet pairs;
  pairs.dim_d = t.dim_d;
  const std::size_t width = 2 * static_cast<std::size_t>(t.dim_d);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::span<const double> row(t.rows[r]);
    pairs.push_back(t.ids[r], row[0], row.subspan(1, width), row.subspan(1 + width, width));
  }
  if (pairs.count() == 0) throw EmptyDataError("pair file has no rows");
  pairs.validate();
  return pairs;
}

DataPairSet read_pairs(const std::filesystem::path& path) {
  auto is = open_in(path);
  return read_pairs(is);
}

nlohmann::ordered_json to_json(const BasisDescriptor& d) {
  nlohmann::ordered_json j;
  j["degree"] = d.degree;
  j["dims"] = d.dims;
  j["lower"] = d.lower;
  j["upper"] = d.upper;
  j["ordering"] = d.ordering;
  j["policy"] = to_string(d.policy);
  return j;
}

BasisDescriptor basis_descriptor_from_json(const nlohmann::ordered_json& j) {
  try {
    BasisDescriptor d;
    d.degree = j.at("degree").get<int>();
    d.dims = j.at("dims").get<int>();
    d.lower = j.at("lower").get<std::vector<double>>();
    d.upper = j.at("upper").get<std::vector<double>>();
    d.ordering = j.at("ordering").get<std::string>();
    d.policy = domain_policy_from_string(j.value("policy", std::string("strict")));
    if (d.ordering != "graded-lex") throw IoError("unsupported basis ordering " + d.ordering);
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed basis descriptor: ") + e.what());
  }
}

nlohmann::ordered_json model_to_json(const HamiltonianModel& model) {
  nlohmann::ordered_json j;
  j["format"] = "hamlearn-model";
  j["version"] = 1;
  j["basis"] = to_json(model.basis().descriptor());
  j["constant"] = model.constant();
  j["coefficients"] = model.coefficients();
  const auto& r = model.solver_report();
  j["solver"] = {{"rank", r.rank}, {"eig_min", r.eig_min}, {"eig_max", r.eig_max},
                 {"residual", r.residual}};
  j["pairs_hash"] = model.pairs_hash;
  j["pair_count"] = model.pair_count;
  return j;
}

HamiltonianModel model_from_json(const nlohmann::ordered_json& j) {
  try {
    if (j.at("format").get<std::string>() != "hamlearn-model") throw IoError("not a model file");
    const TotalDegreeBasis basis(basis_descriptor_from_json(j.at("basis")));
    SolverReport r;
    const auto& s = j.at("solver");
    r.rank = s.at("rank").get<std::size_t>();
    r.eig_min = s.at("eig_min").get<double>();
    r.eig_max = s.at("eig_max").get<double>();
    r.residual = s.at("residual").get<double>();
    HamiltonianModel m(basis, j.at("coefficients").get<std::vector<double>>(), r);
    m.pairs_hash = j.value("pairs_hash", std::string());
    m.pair_count = j.value("pair_count", std::size_t{0});
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed model file: ") + e.what());
  }
}

void save_model(const HamiltonianModel& model, const std::filesystem::path& path) {
  auto os = open_out(path);
  os << model_to_json(model).dump(2) << '\n';
  if (!os) throw IoError("write failed: " + path.string());
}

HamiltonianModel load_model(const std::filesystem::path& path) {
  auto is = open_in(path);
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  return model_from_json(j);
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t fnv1a(std::span<const unsigned char> bytes, std::uint64_t h) {
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace hamlearn
