#include "sgpp/rng.hpp"

namespace sgpp {

namespace {

std::seed_seq make_seed(std::uint64_t master_seed, std::uint64_t stream_id) {
  auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffu); };
  auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
  return std::seed_seq{lo(master_seed), hi(master_seed), lo(stream_id), hi(stream_id), 0x5367707du};
}

}  // namespace

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t stream_id)
    : master_seed_(master_seed), stream_id_(stream_id) {
  std::seed_seq seq = make_seed(master_seed, stream_id);
  engine_.seed(seq);
}

Vec RngStream::normal_vec(std::size_t dim) {
  Vec v(static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = normal();
  return v;
}

}  // namespace sgpp
