#pragma once

#include <functional>
#include <span>
#include <vector>

#include "steprl/env.hpp"
#include "steprl/policy.hpp"
#include "steprl/search.hpp"
#include "steprl/types.hpp"

namespace steprl {

// Brute-force ground truth, kept deliberately independent of the sampling
// code paths: its own traversal, its own aggregation arithmetic, no RNG.

struct EnumerationResult {
  std::vector<std::vector<Step>> chains;
  std::vector<double> probabilities;  // exact chain probability
  std::vector<int> correct;           // check_answer per chain
};

// Depth-first enumeration of every legal complete chain up to max_steps,
// with exact probabilities under `policy` at `temperature`. Throws
// Error("too-large-to-enumerate") past the guard.
EnumerationResult enumerate_all_chains(const EnvSpec& spec, const Question& q,
                                       const PolicyParams& policy,
                                       double temperature,
                                       std::size_t guard = 10'000'000);

// Sum of probabilities of correct chains.
double exact_success_prob(const EnvSpec& spec, const Question& q,
                          const PolicyParams& policy, double temperature);

// Exact expected best-of-n accuracy: chains are collapsed into
// (answer, step-score) classes, and all n-multisets of classes are summed
// with multinomial weights. Scores come from `scorer` via the step_agg rule.
double exact_best_of_n_accuracy(const EnvSpec& spec, const Question& q,
                                const PolicyParams& policy, double temperature,
                                const StepScorer& scorer, int n,
                                StepAgg step_agg, AnswerAgg answer_agg);

// D*(x) = p_e(x) / (p_e(x) + p_theta(x)); the cross-entropy minimizer the
// trained discriminator must converge to.
std::vector<double> optimal_discriminator_table(
    std::span<const double> expert_dist, std::span<const double> policy_dist);

// Central finite differences restricted to the given coordinates.
std::vector<double> finite_difference_grad(
    const std::function<double(std::span<const double>)>& objective,
    std::span<double> params, std::span<const std::uint32_t> active, double h);

// Direct textbook evaluation of the answer-aggregation formulas, written
// separately from search.cpp so the two can check each other.
Answer aggregate_answers_direct(std::span<const Answer> answers,
                                std::span<const double> scores,
                                AnswerAgg mode);

}  // namespace steprl
