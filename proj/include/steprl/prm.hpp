#pragma once

#include <span>
#include <utility>
#include <vector>

#include "steprl/adam_fwd.hpp"
#include "steprl/env.hpp"
#include "steprl/policy.hpp"
#include "steprl/types.hpp"

namespace steprl {

// Linear scoring head f_phi over the same feature space as the policy. The
// PRM holds no policy state: every reward query takes the policy snapshot
// explicitly, so one PRM can score steps under any generator.
struct PRMParams {
  std::uint32_t dim = 0;
  std::uint64_t version = 0;
  std::vector<double> weights;
};

PRMParams make_prm(std::uint32_t dim);

// f_phi(q, C_<=i): prefix_including_step ends with the step being scored.
double score_f(const PRMParams& prm, const Question& q,
               std::span<const Step> prefix_including_step);

// D = exp(f) / (exp(f) + exp(policy_logprob)), evaluated in log space.
double discriminator(double f_value, double policy_logprob);
double log_discriminator(double f_value, double policy_logprob);
double log_one_minus_discriminator(double f_value, double policy_logprob);

// Step-wise reward log(D / (1-D)), computed by the exact algebraic identity
// f - log pi (temperature-1 log probability).
double step_reward(const PRMParams& prm, const PolicyParams& policy,
                   const EnvSpec& spec, const Question& q,
                   std::span<const Step> prefix, const Step& step);

// One (question, prefix, step) sample for the discriminator loss. Spans
// alias rollout or buffer storage and must outlive the call.
struct StepSample {
  const Question* question = nullptr;
  std::span<const Step> prefix;
  Step step;
};

// Collects every step of a rollout as StepSamples (prefixes alias r.steps).
void append_step_samples(const Question& q, const Rollout& r,
                         std::vector<StepSample>& out);

// Discriminator cross-entropy: mean over expert steps of -log D plus mean
// over policy steps of -log(1-D), with D built from the current policy's
// temperature-1 logprob. Both lists must be nonempty.
double airl_loss(const PRMParams& prm, const PolicyParams& policy,
                 const EnvSpec& spec, std::span<const StepSample> expert_steps,
                 std::span<const StepSample> policy_steps);

// Analytic gradient w.r.t. prm.weights: -(1-D)/Ne * phi per expert step,
// +D/Np * phi per policy step.
SparseVec airl_loss_grad(const PRMParams& prm, const PolicyParams& policy,
                         const EnvSpec& spec,
                         std::span<const StepSample> expert_steps,
                         std::span<const StepSample> policy_steps);

// Loss and gradient from one shared pass (what the trainer calls).
std::pair<double, SparseVec> airl_loss_with_grad(
    const PRMParams& prm, const PolicyParams& policy, const EnvSpec& spec,
    std::span<const StepSample> expert_steps,
    std::span<const StepSample> policy_steps);

// One Adam step descending the AIRL loss; bumps version.
void prm_update(PRMParams& prm, const SparseVec& gradient, AdamState& state,
                double learning_rate);

}  // namespace steprl
