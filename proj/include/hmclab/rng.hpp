#pragma once

#include <cstdint>
#include <limits>
#include <random>

#include "hmclab/core.hpp"

namespace hmclab {

// Counter-based random stream. Output i of stream (seed, id) is a SplitMix64
// finalizer applied to a key derived from (seed, id) plus i times the Weyl
// increment, so a stream replays identically and streams with distinct ids
// never share state. Satisfies UniformRandomBitGenerator.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint64_t stream_id = 0)
      : seed_(seed), id_(stream_id), key_(mix(seed ^ mix(stream_id + kWeyl))) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return mix(key_ + kWeyl * ++counter_); }

  // Independent child stream; deterministic in (seed, id, child).
  RngStream split(std::uint64_t child) const { return RngStream(seed_, mix(id_ ^ mix(child + 0x1234567ULL))); }

  double normal() { return normal_(*this); }

  Vector normal_vector(int d) {
    Vector out(d);
    for (int i = 0; i < d; ++i) out[i] = normal();
    return out;
  }

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(*this); }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t id() const { return id_; }
  std::uint64_t counter() const { return counter_; }

 private:
  static constexpr std::uint64_t kWeyl = 0x9e3779b97f4a7c15ULL;

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::uint64_t id_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace hmclab
