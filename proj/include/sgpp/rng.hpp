#pragma once

#include "sgpp/geometry.hpp"

#include <cstdint>
#include <random>

namespace sgpp {

// Independent random stream keyed by (master_seed, stream_id). The same key
// always yields the same draws, whichever thread consumes it.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_id);

  std::uint64_t master_seed() const { return master_seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  Vec normal_vec(std::size_t dim);

 private:
  std::uint64_t master_seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace sgpp
