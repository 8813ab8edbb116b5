#include "sgpp/svg_plot.hpp"

#include "sgpp/error.hpp"

#include <algorithm>
#include <cmath>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <tuple>

namespace sgpp {

namespace {

struct View {
  double x_min, y_max, scale;

  // Coordinates are clamped so a diverged state still lands on the canvas edge.
  std::pair<double, double> map(double x, double y, int size) const {
    const double px = std::clamp((x - x_min) * scale, 0.0, static_cast<double>(size));
    const double py = std::clamp((y_max - y) * scale, 0.0, static_cast<double>(size));
    return {px, py};
  }
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string file_safe(const std::string& s) {
  std::string out;
  for (char c : s) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.') ? c : '_';
  return out;
}

}  // namespace

std::string render_svg(const Manifold& m, std::span<const CsvRow> rows, const PlotSpec& spec) {
  const int size = spec.size_px;
  const auto outline = sample_outline(m, spec.outline_points);

  // Frame: outline bounding box with a margin of half its larger side.
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const Vec& p : outline) {
    x0 = std::min(x0, p[0]);
    x1 = std::max(x1, p[0]);
    y0 = std::min(y0, p[1]);
    y1 = std::max(y1, p[1]);
  }
  const double side = std::max(x1 - x0, y1 - y0) * 2.0;
  const double cx = 0.5 * (x0 + x1), cy = 0.5 * (y0 + y1);
  const View view{cx - side / 2.0, cy + side / 2.0, size / side};

  std::string svg;
  svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + std::to_string(size) +
         "\" height=\"" + std::to_string(size) + "\" viewBox=\"0 0 " + std::to_string(size) + " " +
         std::to_string(size) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!spec.title.empty()) {
    svg += "<text x=\"8\" y=\"18\" font-family=\"monospace\" font-size=\"12\">" + escape(spec.title) + "</text>\n";
  }

  // Outline: one polyline per component, in sample order.
  const std::size_t per = spec.outline_points;
  for (std::size_t c = 0; c * per < outline.size(); ++c) {
    svg += "<polyline class=\"manifold\" fill=\"none\" stroke=\"black\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = c * per; i < std::min(outline.size(), (c + 1) * per); ++i) {
      const auto [px, py] = view.map(outline[i][0], outline[i][1], size);
      svg += num(px) + "," + num(py) + " ";
    }
    svg += "\"/>\n";
  }

  // Group rows by trajectory, keep step order.
  std::map<std::size_t, std::vector<const CsvRow*>> by_traj;
  for (const CsvRow& r : rows) by_traj[r.trajectory_id].push_back(&r);
  for (auto& [id, recs] : by_traj) {
    std::stable_sort(recs.begin(), recs.end(), [](const CsvRow* a, const CsvRow* b) { return a->step < b->step; });
    if (spec.polylines && recs.size() > 1) {
      svg += "<polyline class=\"trajectory\" fill=\"none\" stroke=\"steelblue\" stroke-opacity=\"0.35\" "
             "stroke-width=\"0.8\" points=\"";
      for (const CsvRow* r : recs) {
        if (!r->x.allFinite()) break;
        const auto [px, py] = view.map(r->x[0], r->x[1], size);
        svg += num(px) + "," + num(py) + " ";
      }
      svg += "\"/>\n";
    }
  }
  for (auto& [id, recs] : by_traj) {
    const CsvRow* last = recs.back();
    if (!last->x.allFinite()) continue;
    const auto [px, py] = view.map(last->x[0], last->x[1], size);
    svg += "<circle class=\"terminal\" cx=\"" + num(px) + "\" cy=\"" + num(py) + "\" r=\"2.5\" fill=\"crimson\"/>\n";
  }
  svg += "</svg>\n";
  return svg;
}

std::vector<std::filesystem::path> render_plot(const std::filesystem::path& csv_path, const Manifold& m,
                                               const std::filesystem::path& out_dir, PlotSpec spec) {
  const auto rows = read_trajectories_csv(csv_path);
  for (const CsvRow& r : rows) {
    if (r.x.size() < 2) throw Error(ErrorCode::schema_mismatch, "plots need at least two coordinates");
  }
  std::filesystem::create_directories(out_dir);

  // Groups keep first-appearance order.
  std::vector<std::pair<std::string, std::string>> keys;
  std::map<std::pair<std::string, std::string>, std::vector<CsvRow>> groups;
  for (const CsvRow& r : rows) {
    auto key = std::make_pair(r.experiment_id, r.method);
    auto [it, fresh] = groups.try_emplace(key);
    if (fresh) keys.push_back(key);
    it->second.push_back(r);
  }

  std::vector<std::filesystem::path> written;
  auto emit = [&](const std::string& stem, std::span<const CsvRow> group, const std::string& title) {
    PlotSpec s = spec;
    if (s.title.empty()) s.title = title;
    const auto path = out_dir / (file_safe(stem) + ".svg");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::config_error, "cannot write " + path.string());
    out << render_svg(m, group, s);
    written.push_back(path);
  };
  if (keys.empty()) emit(csv_path.stem().string(), {}, csv_path.stem().string());
  for (const auto& key : keys) emit(key.first + "__" + key.second, groups[key], key.first + " (" + key.second + ")");
  return written;
}

}  // namespace sgpp
