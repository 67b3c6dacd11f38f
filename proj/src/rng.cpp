#include "steprl/rng.hpp"

#include <cstring>

namespace steprl {

namespace {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t fnv1a64(const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t fnv1a64(std::string_view s) { return fnv1a64(s.data(), s.size()); }

Rng Rng::stream(std::uint64_t seed, std::string_view purpose, std::uint64_t a,
                std::uint64_t b, std::uint64_t c) {
  std::uint64_t state = fnv1a64(purpose) ^ seed;
  splitmix64(state);
  state ^= a * 0x9e3779b97f4a7c15ULL;
  splitmix64(state);
  state ^= b * 0xc2b2ae3d27d4eb4fULL;
  splitmix64(state);
  state ^= c * 0x165667b19e3779f9ULL;
  splitmix64(state);
  return Rng(state);
}

std::uint64_t Rng::next_u64() { return splitmix64(state_); }

double Rng::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::next_below(std::uint64_t n) {
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    const std::uint64_t x = next_u64();
    if (x >= threshold) return x % n;
  }
}

std::size_t Rng::sample_index(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  const double u = next_double() * total;
  double cum = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] > 0.0) last_positive = i;
    cum += weights[i];
    if (u < cum) return i;
  }
  return last_positive;
}

}  // namespace steprl
