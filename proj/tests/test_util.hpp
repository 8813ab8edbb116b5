#pragma once

#include "sgpp/geometry.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

namespace testutil {

inline sgpp::Vec v2(double x, double y) {
  sgpp::Vec v(2);
  v << x, y;
  return v;
}

inline double rel_err(const sgpp::Vec& a, const sgpp::Vec& b) {
  return (a - b).norm() / std::max(1.0, b.norm());
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("sgpp_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testutil
