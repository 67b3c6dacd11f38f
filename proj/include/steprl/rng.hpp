#pragma once

#include <cstdint>
#include <span>
#include <string_view>

namespace steprl {

// Deterministic counter-free generator (splitmix64). Every consumer derives
// its own named stream from the single run seed, so results are identical
// across runs, platforms, and thread schedules.
class Rng {
 public:
  explicit Rng(std::uint64_t state) : state_(state) {}

  // Derives an independent stream from (seed, purpose, ids). Streams with
  // different purpose strings or ids never overlap in practice.
  static Rng stream(std::uint64_t seed, std::string_view purpose,
                    std::uint64_t a = 0, std::uint64_t b = 0,
                    std::uint64_t c = 0);

  std::uint64_t next_u64();

  // Uniform in [0, 1), 53-bit resolution.
  double next_double();

  // Uniform in [0, n), unbiased via rejection. n must be > 0.
  std::uint64_t next_below(std::uint64_t n);

  // Draws an index from an (unnormalized is fine) nonnegative weight vector
  // by a single CDF walk. Returns the last index with positive weight if the
  // draw lands in rounding residue.
  std::size_t sample_index(std::span<const double> weights);

 private:
  std::uint64_t state_;
};

// FNV-1a over raw bytes; the project-wide stable hash (never std::hash).
std::uint64_t fnv1a64(const void* data, std::size_t len);
std::uint64_t fnv1a64(std::string_view s);

}  // namespace steprl
