#include "sgpp/trajectory_io.hpp"

#include "sgpp/error.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace sgpp {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

[[noreturn]] void mismatch(std::size_t line, const std::string& why) {
  throw Error(ErrorCode::schema_mismatch, "line " + std::to_string(line) + ": " + why);
}

double parse_double(const std::string& s, std::size_t line) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) mismatch(line, "bad number '" + s + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& s, std::size_t line) {
  std::uint64_t v = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size() || s.empty()) mismatch(line, "bad integer '" + s + "'");
  return v;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_header(std::size_t dim) {
  std::string h = "experiment_id,method,trajectory_id,step,t";
  for (std::size_t i = 0; i < dim; ++i) h += ",x" + std::to_string(i);
  h += ",normal_distance,sigma_p,eta,seed_master,seed_stream";
  return h;
}

void write_trajectories_csv(std::ostream& out, std::span<const LabeledEnsemble> blocks, std::size_t fallback_dim) {
  std::size_t dim = 0;
  for (const auto& b : blocks) {
    for (const auto& traj : b.trajectories) {
      if (traj.records.empty()) continue;
      const auto d = static_cast<std::size_t>(traj.records.front().x.size());
      if (dim != 0 && d != dim) throw Error(ErrorCode::schema_mismatch, "mixed dimensions in one CSV");
      dim = d;
    }
  }
  out << csv_header(dim == 0 ? fallback_dim : dim) << '\n';
  std::string line;
  for (const auto& b : blocks) {
    for (std::size_t id = 0; id < b.trajectories.size(); ++id) {
      const Trajectory& traj = b.trajectories[id];
      const std::string prefix = b.experiment_id + "," + std::string(to_string(traj.method)) + "," + std::to_string(id);
      const std::string suffix = "," + format_double(traj.params.sigma_p) + "," + format_double(traj.params.eta) +
                                 "," + std::to_string(traj.master_seed) + "," + std::to_string(traj.stream_id);
      for (std::size_t k = 0; k < traj.records.size(); ++k) {
        const TrajectoryRecord& r = traj.records[k];
        line = prefix;
        line += "," + std::to_string(k) + "," + format_double(r.t);
        for (Eigen::Index i = 0; i < r.x.size(); ++i) line += "," + format_double(r.x[i]);
        line += ",";
        if (r.normal_distance) line += format_double(*r.normal_distance);
        line += suffix;
        out << line << '\n';
      }
    }
  }
}

void write_trajectories_csv(const std::filesystem::path& path, std::span<const LabeledEnsemble> blocks,
                            std::size_t fallback_dim) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::config_error, "cannot write " + path.string());
  write_trajectories_csv(out, blocks, fallback_dim);
}

std::vector<CsvRow> read_trajectories_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) mismatch(1, "missing header");
  const auto head = split(line);
  // 5 leading columns, D coordinates, 5 trailing columns.
  if (head.size() < 11) mismatch(1, "header too short");
  const std::size_t dim = head.size() - 10;
  if (line != csv_header(dim)) mismatch(1, "unexpected header '" + line + "'");

  std::vector<CsvRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') mismatch(lineno, "CRLF line ending");
    const auto f = split(line);
    if (f.size() != head.size()) mismatch(lineno, "expected " + std::to_string(head.size()) + " fields");
    CsvRow r;
    r.experiment_id = f[0];
    r.method = f[1];
    if (!parse_method(r.method)) mismatch(lineno, "unknown method '" + r.method + "'");
    r.trajectory_id = parse_u64(f[2], lineno);
    r.step = parse_u64(f[3], lineno);
    r.t = parse_double(f[4], lineno);
    r.x.resize(static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < dim; ++i) r.x[static_cast<Eigen::Index>(i)] = parse_double(f[5 + i], lineno);
    if (!f[5 + dim].empty()) r.normal_distance = parse_double(f[5 + dim], lineno);
    r.sigma_p = parse_double(f[6 + dim], lineno);
    r.eta = parse_double(f[7 + dim], lineno);
    r.seed_master = parse_u64(f[8 + dim], lineno);
    r.seed_stream = parse_u64(f[9 + dim], lineno);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<CsvRow> read_trajectories_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::schema_mismatch, "cannot read " + path.string());
  return read_trajectories_csv(in);
}

}  // namespace sgpp
