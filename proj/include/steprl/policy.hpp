#pragma once

#include <span>
#include <vector>

#include "steprl/env.hpp"
#include "steprl/features.hpp"
#include "steprl/rng.hpp"
#include "steprl/types.hpp"

namespace steprl {

// Sparse vector with arbitrary real values (gradients share the Feature
// index/value layout; indices strictly increasing).
using SparseVec = FeatureVector;

// Linear softmax step policy over hashed features. Snapshots (theta_old,
// theta_ref) are plain copies; all functions treat params as immutable.
struct PolicyParams {
  std::uint32_t dim = 0;
  std::uint64_t version = 0;
  std::vector<double> weights;
};

PolicyParams make_policy(std::uint32_t dim);

// Candidates plus their feature vectors, computed once per decision point so
// several parameter snapshots can be scored against the same features.
struct CandidateSet {
  std::vector<ActionCandidate> candidates;
  std::vector<FeatureVector> features;
};

CandidateSet featurized_candidates(const EnvSpec& spec, const Question& q,
                                   std::span<const Step> prefix,
                                   std::uint32_t dim);

std::vector<double> candidate_logits(const PolicyParams& params,
                                     const CandidateSet& cs);

// Stable softmax of logits/temperature. temperature == 0 is a point mass on
// the argmax logit, ties broken toward the lowest action_id (i.e. the first
// candidate in canonical order). Sums to 1 within 1e-12.
std::vector<double> softmax_over_candidates(std::span<const double> logits,
                                            double temperature);

std::vector<double> step_distribution(const PolicyParams& params,
                                      const EnvSpec& spec, const Question& q,
                                      std::span<const Step> prefix,
                                      double temperature);

// Natural log of the temperature-1 probability of `step` among the legal
// candidates. Training-time probabilities are always temperature 1; the
// sampling temperature only shapes exploration. Throws Error("illegal-step").
double logprob_step(const PolicyParams& params, const EnvSpec& spec,
                    const Question& q, std::span<const Step> prefix,
                    const Step& step);

// d/dtheta log pi(step | q, prefix) = phi(step) - sum_a pi(a) phi(a).
SparseVec grad_logprob(const PolicyParams& params, const EnvSpec& spec,
                       const Question& q, std::span<const Step> prefix,
                       const Step& step);

// Same, from precomputed features and temperature-1 probabilities.
SparseVec grad_logprob_from(const CandidateSet& cs,
                            std::span<const double> probs, std::size_t idx);

// Samples steps until a terminal step or max_steps. Records per-step log
// probabilities at the sampling temperature. If max_steps is hit without a
// terminal step, a forced terminal step (argmax terminal candidate) is
// appended and the rollout is marked truncated; its logprob is recorded at
// temperature 1 so the record stays finite. temperature 0 consumes no
// randomness.
Rollout sample_chain(const PolicyParams& params, const EnvSpec& spec,
                     const Question& q, double temperature, Rng& rng);

// Index of `step` in the candidate list, or -1.
int find_candidate(std::span<const ActionCandidate> cands, const Step& step);

// Best-scoring terminal candidate (the truncation fallback). Returns its
// index, or -1 when no candidate is terminal.
int argmax_terminal(std::span<const ActionCandidate> cands,
                    std::span<const double> logits);

// Merges (index, value) pairs into a sorted sparse vector, dropping zeros.
SparseVec merge_sparse(std::vector<Feature> entries);

}  // namespace steprl
