#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "steprl/types.hpp"

namespace steprl {

// Sparse feature: strictly increasing indices in [0, dim); values are signed
// occurrence counts from the sign hash.
struct Feature {
  std::uint32_t index = 0;
  double value = 0.0;
};

using FeatureVector = std::vector<Feature>;

// Signed feature hashing of a (question, prefix, candidate-step) context.
// dim must be a power of two. Identical inputs produce identical vectors on
// every run and platform (FNV-1a over fixed-width encodings).
//
// Templates, hashed with a group tag:
//   Q    (payload index j, payload token)                    question only
//   L1   (last step, candidate)
//   L2   (second-to-last step, candidate)
//   POS  (step-index bucket, candidate)
//   C    (candidate)
//   BGL  (j, payload bigram, last step, candidate)           prefix >= 1
//   TGC  (j, payload trigram, candidate)                     opening step
//
// BGL/TGC carry the token-context x state x action interactions a linear
// scorer needs to rank next steps; Q terms shift the PRM score per question
// and cancel inside the policy softmax.
void featurize_into(const Question& q, std::span<const Step> prefix,
                    const Step& candidate, std::uint32_t dim,
                    FeatureVector& out);

FeatureVector featurize(const Question& q, std::span<const Step> prefix,
                        const Step& candidate, std::uint32_t dim);

double dot(std::span<const double> weights, const FeatureVector& fv);

// weights[f.index] += alpha * f.value
void axpy(double alpha, const FeatureVector& fv, std::span<double> weights);

bool is_power_of_two(std::uint32_t x);

}  // namespace steprl
