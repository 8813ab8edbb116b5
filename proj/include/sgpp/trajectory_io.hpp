#pragma once

// trajectories.csv: one row per trajectory record.
//   experiment_id,method,trajectory_id,step,t,x0..x{D-1},normal_distance,
//   sigma_p,eta,seed_master,seed_stream
// Floats use 17 significant digits, lines end in LF, a missing normal
// distance is an empty field.

#include "sgpp/samplers.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sgpp {

std::string csv_header(std::size_t dim);

struct LabeledEnsemble {
  std::string experiment_id;
  std::span<const Trajectory> trajectories;
};

// fallback_dim sizes the header when no block holds a record.
void write_trajectories_csv(std::ostream& out, std::span<const LabeledEnsemble> blocks, std::size_t fallback_dim = 2);
void write_trajectories_csv(const std::filesystem::path& path, std::span<const LabeledEnsemble> blocks,
                            std::size_t fallback_dim = 2);

struct CsvRow {
  std::string experiment_id;
  std::string method;
  std::size_t trajectory_id = 0;
  std::size_t step = 0;
  double t = 0.0;
  Vec x;
  std::optional<double> normal_distance;
  double sigma_p = 0.0;
  double eta = 0.0;
  std::uint64_t seed_master = 0;
  std::uint64_t seed_stream = 0;
};

// Throws SchemaMismatch on a bad header or row.
std::vector<CsvRow> read_trajectories_csv(std::istream& in);
std::vector<CsvRow> read_trajectories_csv(const std::filesystem::path& path);

std::string format_double(double v);

}  // namespace sgpp
