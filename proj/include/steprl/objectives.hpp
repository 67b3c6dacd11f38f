#pragma once

#include <span>
#include <vector>

#include "steprl/env.hpp"
#include "steprl/policy.hpp"
#include "steprl/prm.hpp"
#include "steprl/types.hpp"

namespace steprl {

struct CompositeObjectiveConfig {
  double lambda = 0.5;       // J = lambda * J_AIRL + (1 - lambda) * J_GRPO
  double clip_epsilon = 0.2;
  double kl_beta = 0.001;
  int group_size = 8;
  double advantage_floor = 1e-8;
};

// G rollouts for one question, all sampled from the same old policy.
struct GroupRollouts {
  QuestionId question_id = 0;
  std::vector<Rollout> rollouts;
};

// (r_k - mean) / (population std + floor); all zeros when every reward is
// equal. Throws Error("group-too-small") for fewer than 2 rewards.
std::vector<double> grpo_advantages(std::span<const double> outcome_rewards,
                                    double floor);

// Per-step advantages: undiscounted PRM reward-to-go minus the group-mean
// total return, scaled by 1 / (population std of total returns + floor).
// Identical totals (std == 0) yield all zeros. Populates/uses the rollouts'
// prm_rewards caches against `policy_snapshot`.
std::vector<std::vector<double>> airl_step_advantages(
    GroupRollouts& group, const PRMParams& prm,
    const PolicyParams& policy_snapshot, const EnvSpec& spec,
    const Question& q, double floor);

// min(ratio*A, clip(ratio, 1-eps, 1+eps)*A)
double clipped_term(double ratio, double advantage, double epsilon);

// k3 estimator of KL(pi_theta || pi_ref) from sequence logprobs:
// ratio - log(ratio) - 1 with ratio = exp(logp_ref - logp_theta).
double kl_k3(double logp_theta_seq, double logp_ref_seq);

struct ObjectiveResult {
  double value = 0.0;
  SparseVec grad;   // d value / d theta
  double mean_kl = 0.0;  // mean k3 per rollout (j_grpo only)
};

// Sequence-level clipped surrogate on outcome-reward group advantages minus
// beta * k3 against the frozen reference, averaged over the group. Throws
// Error("support-mismatch") if any rollout has zero probability under theta.
ObjectiveResult j_grpo(const GroupRollouts& group, const Question& q,
                       const EnvSpec& spec, const PolicyParams& theta,
                       const PolicyParams& theta_old,
                       const PolicyParams& theta_ref,
                       const CompositeObjectiveConfig& config);

// Step-level clipped surrogate on PRM reward-to-go advantages, summed over
// steps and averaged over the group. No KL term.
ObjectiveResult j_airl(GroupRollouts& group, const Question& q,
                       const EnvSpec& spec, const PolicyParams& theta,
                       const PolicyParams& theta_old, const PRMParams& prm,
                       const CompositeObjectiveConfig& config);

struct CompositeResult {
  double value = 0.0;
  SparseVec grad;
  double j_airl_value = 0.0;  // 0 when the branch was skipped
  double j_grpo_value = 0.0;
  double mean_kl = 0.0;
};

// lambda * J_AIRL + (1-lambda) * J_GRPO, with both component values from the
// same pass. At lambda == 0 the PRM advantage path is never evaluated; at
// lambda == 1 the GRPO path (and its KL) is skipped.
CompositeResult composite_objective_detailed(
    GroupRollouts& group, const Question& q, const EnvSpec& spec,
    const PolicyParams& theta, const PolicyParams& theta_old,
    const PolicyParams& theta_ref, const PRMParams& prm,
    const CompositeObjectiveConfig& config);

ObjectiveResult composite_objective(GroupRollouts& group, const Question& q,
                                    const EnvSpec& spec,
                                    const PolicyParams& theta,
                                    const PolicyParams& theta_old,
                                    const PolicyParams& theta_ref,
                                    const PRMParams& prm,
                                    const CompositeObjectiveConfig& config);

// a + alpha * b (sparse).
SparseVec sparse_add(const SparseVec& a, const SparseVec& b, double alpha = 1.0);
SparseVec sparse_scale(SparseVec v, double alpha);

}  // namespace steprl
