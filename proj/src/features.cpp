#include "steprl/features.hpp"

#include <algorithm>
#include <array>
#include <cstring>

#include "steprl/error.hpp"
#include "steprl/rng.hpp"

namespace steprl {

namespace {

enum Group : std::uint64_t {
  kQuestionToken = 1,
  kLastStep = 2,
  kSecondLastStep = 3,
  kPositionBucket = 4,
  kCandidateAlone = 5,
  kBigramLast = 6,
  kTrigramOpening = 7,
};

// Fixed-width little-endian encoding keeps the hash platform-independent.
struct KeyHasher {
  std::array<std::uint64_t, 8> parts{};
  std::size_t n = 0;

  void add(std::uint64_t v) { parts[n++] = v; }

  std::uint64_t finish() const {
    unsigned char bytes[8 * sizeof(std::uint64_t)];
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t b = 0; b < 8; ++b)
        bytes[i * 8 + b] =
            static_cast<unsigned char>((parts[i] >> (8 * b)) & 0xff);
    }
    return fnv1a64(bytes, n * 8);
  }
};

std::uint64_t step_key(const Step& s) {
  // Packs (action_id, is_terminal, declared_answer) into one token.
  std::uint64_t k = static_cast<std::uint64_t>(s.action_id) * 4u + 1u;
  if (s.is_terminal)
    k = k * 0x1f3u + 2u + static_cast<std::uint64_t>(s.declared_answer) * 4u;
  return k;
}

struct RawFeature {
  std::uint32_t index;
  std::int8_t sign;
};

thread_local std::vector<RawFeature> tl_scratch;

inline void emit(std::vector<RawFeature>& raw, std::uint64_t h,
                 std::uint32_t mask) {
  raw.push_back({static_cast<std::uint32_t>(h) & mask,
                 (h >> 63) ? std::int8_t{-1} : std::int8_t{1}});
}

}  // namespace

bool is_power_of_two(std::uint32_t x) { return x != 0 && (x & (x - 1)) == 0; }

void featurize_into(const Question& q, std::span<const Step> prefix,
                    const Step& candidate, std::uint32_t dim,
                    FeatureVector& out) {
  if (!is_power_of_two(dim)) throw Error("bad-dim", "dim must be a power of two");
  const std::uint32_t mask = dim - 1;
  auto& raw = tl_scratch;
  raw.clear();

  const std::uint64_t cand = step_key(candidate);
  const auto& pl = q.payload;

  for (std::size_t j = 0; j < pl.size(); ++j) {
    KeyHasher h;
    h.add(kQuestionToken);
    h.add(j);
    h.add(static_cast<std::uint64_t>(pl[j]));
    emit(raw, h.finish(), mask);
  }

  if (!prefix.empty()) {
    const std::uint64_t last = step_key(prefix.back());
    {
      KeyHasher h;
      h.add(kLastStep);
      h.add(last);
      h.add(cand);
      emit(raw, h.finish(), mask);
    }
    if (prefix.size() >= 2) {
      KeyHasher h;
      h.add(kSecondLastStep);
      h.add(step_key(prefix[prefix.size() - 2]));
      h.add(cand);
      emit(raw, h.finish(), mask);
    }
    for (std::size_t j = 0; j + 1 < pl.size(); ++j) {
      KeyHasher h;
      h.add(kBigramLast);
      h.add(j);
      h.add(static_cast<std::uint64_t>(pl[j]));
      h.add(static_cast<std::uint64_t>(pl[j + 1]));
      h.add(last);
      h.add(cand);
      emit(raw, h.finish(), mask);
    }
  } else {
    for (std::size_t j = 0; j + 2 < pl.size(); ++j) {
      KeyHasher h;
      h.add(kTrigramOpening);
      h.add(j);
      h.add(static_cast<std::uint64_t>(pl[j]));
      h.add(static_cast<std::uint64_t>(pl[j + 1]));
      h.add(static_cast<std::uint64_t>(pl[j + 2]));
      h.add(cand);
      emit(raw, h.finish(), mask);
    }
  }

  {
    KeyHasher h;
    h.add(kPositionBucket);
    h.add(std::min<std::uint64_t>(prefix.size(), 15));
    h.add(cand);
    emit(raw, h.finish(), mask);
  }
  {
    KeyHasher h;
    h.add(kCandidateAlone);
    h.add(cand);
    emit(raw, h.finish(), mask);
  }

  std::sort(raw.begin(), raw.end(),
            [](const RawFeature& a, const RawFeature& b) {
              return a.index < b.index;
            });

  out.clear();
  for (std::size_t i = 0; i < raw.size();) {
    const std::uint32_t idx = raw[i].index;
    int sum = 0;
    while (i < raw.size() && raw[i].index == idx) sum += raw[i++].sign;
    if (sum != 0) out.push_back({idx, static_cast<double>(sum)});
  }
}

FeatureVector featurize(const Question& q, std::span<const Step> prefix,
                        const Step& candidate, std::uint32_t dim) {
  FeatureVector out;
  featurize_into(q, prefix, candidate, dim, out);
  return out;
}

double dot(std::span<const double> weights, const FeatureVector& fv) {
  double acc = 0.0;
  for (const auto& f : fv) acc += weights[f.index] * f.value;
  return acc;
}

void axpy(double alpha, const FeatureVector& fv, std::span<double> weights) {
  for (const auto& f : fv) weights[f.index] += alpha * f.value;
}

}  // namespace steprl
