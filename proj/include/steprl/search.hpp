#pragma once

#include <functional>
#include <span>
#include <vector>

#include "steprl/env.hpp"
#include "steprl/policy.hpp"
#include "steprl/prm.hpp"
#include "steprl/rng.hpp"
#include "steprl/types.hpp"

namespace steprl {

enum class StepAgg { min, last };
enum class AnswerAgg { max, sum, majority };

StepAgg step_agg_from_name(const std::string& name);
AnswerAgg answer_agg_from_name(const std::string& name);

struct SearchConfig {
  int n = 64;               // solutions to produce
  int m = 4;                // tree / beam width
  double temperature = 0.7;
  double uct_alpha = 1.25;
  StepAgg step_agg = StepAgg::min;
  AnswerAgg answer_agg = AnswerAgg::sum;  // min+sum: PRM-Min-Sum default
};

// Scores one step in context. Search never touches PRM internals through
// anything else, so an oracle-perfect scorer (step_correct) plugs in the
// same way as the trained PRM.
using StepScorer = std::function<double(
    const Question&, std::span<const Step> prefix, const Step& step)>;

// r_phi = f_phi - log pi against the frozen training-policy snapshot bundled
// with the PRM checkpoint; the reward must not depend on the generator being
// guided.
StepScorer make_prm_scorer(const PRMParams& prm,
                           const PolicyParams& frozen_policy,
                           const EnvSpec& spec);

// step_correct as the reward; the "oracle-perfect PRM" baseline.
StepScorer make_oracle_scorer(const EnvSpec& spec);

struct CandidateSolution {
  std::vector<Step> chain;
  std::vector<double> prm_rewards;  // one per step
  double step_score = 0.0;          // step_aggregate(prm_rewards)
  Answer answer = 0;
};

struct SearchOutcome {
  std::vector<CandidateSolution> solutions;
  Answer answer = 0;
  std::size_t rollout_count = 0;  // complete chains generated
};

// min/last over the per-step rewards. Throws Error("empty-rewards").
double step_aggregate(std::span<const double> prm_rewards, StepAgg mode);

// sum:  argmax_a sum of step scores over solutions answering a
// max:  answer of the single highest-scoring solution
// majority: most frequent answer
// All ties break toward the smallest answer token.
Answer answer_aggregate(std::span<const CandidateSolution> solutions,
                        AnswerAgg mode);

// n_node == 0 selects unconditionally (+infinity), otherwise
// mu + alpha * sqrt(ln(n_parent) / n_node).
double uct_score(double mu, std::uint64_t n_parent, std::uint64_t n_node,
                 double alpha);

SearchOutcome best_of_n(const PolicyParams& policy, const StepScorer& scorer,
                        const EnvSpec& spec, const Question& q,
                        const SearchConfig& config, Rng& rng);

// BFS-V: keep the top n/m partial chains ranked by the reward of their
// latest step, expand each survivor by m sampled next steps, collect
// terminal chains until n are finished. Throws Error("beam-shape") unless m
// divides n.
SearchOutcome beam_search(const PolicyParams& policy, const StepScorer& scorer,
                          const EnvSpec& spec, const Question& q,
                          const SearchConfig& config, Rng& rng);

// UCT tree search; expansion samples up to m distinct child steps, each new
// child is rolled out to completion at temperature 0 and valued by the sum
// of step rewards over its simulated suffix. Runs until n distinct complete
// solutions are collected (or the whole space is exhausted).
SearchOutcome mcts(const PolicyParams& policy, const StepScorer& scorer,
                   const EnvSpec& spec, const Question& q,
                   const SearchConfig& config, Rng& rng);

// Majority vote over n independent chains; no reward model. Uses the same
// rollout stream as best_of_n, so the two agree sample-for-sample.
Answer self_consistency(const PolicyParams& policy, const EnvSpec& spec,
                        const Question& q, int n, double temperature,
                        Rng& rng);

// Shared by best_of_n / self_consistency: n chains off one stream.
std::vector<Rollout> sample_n_chains(const PolicyParams& policy,
                                     const EnvSpec& spec, const Question& q,
                                     int n, double temperature, Rng& rng);

CandidateSolution score_solution(const StepScorer& scorer, const Question& q,
                                 std::span<const Step> chain, StepAgg mode);

}  // namespace steprl
