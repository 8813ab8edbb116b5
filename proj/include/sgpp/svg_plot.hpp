#pragma once

// SVG 1.1 scatter/polyline plots of trajectories over the manifold outline.
// Output bytes depend only on the inputs.

#include "sgpp/geometry.hpp"
#include "sgpp/trajectory_io.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace sgpp {

struct PlotSpec {
  bool polylines = true;
  int size_px = 480;
  std::size_t outline_points = 400;  // per component
  std::string title;
};

// One picture from rows of a single (experiment_id, method) group. Rows of
// different trajectories may interleave; each trajectory is drawn in step
// order.
std::string render_svg(const Manifold& m, std::span<const CsvRow> rows, const PlotSpec& spec);

// Reads a trajectories CSV and writes one SVG per (experiment_id, method)
// into out_dir. An empty CSV yields `<csv stem>.svg` with the outline only.
// Returns the written paths in a stable order. Throws SchemaMismatch.
std::vector<std::filesystem::path> render_plot(const std::filesystem::path& csv_path, const Manifold& m,
                                               const std::filesystem::path& out_dir, PlotSpec spec = {});

}  // namespace sgpp
