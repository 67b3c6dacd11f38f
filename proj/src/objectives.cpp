#include "steprl/objectives.hpp"

#include <algorithm>
#include <cmath>

#include "steprl/error.hpp"

namespace steprl {

std::vector<double> grpo_advantages(std::span<const double> outcome_rewards,
                                    double floor) {
  if (outcome_rewards.size() < 2) throw Error("group-too-small");
  const double g = static_cast<double>(outcome_rewards.size());
  double mean = 0.0;
  for (double r : outcome_rewards) mean += r;
  mean /= g;
  double var = 0.0;
  for (double r : outcome_rewards) var += (r - mean) * (r - mean);
  var /= g;
  const double std_dev = std::sqrt(var);

  std::vector<double> adv(outcome_rewards.size(), 0.0);
  if (std_dev == 0.0) return adv;  // degenerate group: inert by definition
  for (std::size_t k = 0; k < outcome_rewards.size(); ++k)
    adv[k] = (outcome_rewards[k] - mean) / (std_dev + floor);
  return adv;
}

namespace {

void ensure_prm_rewards(Rollout& r, const PRMParams& prm,
                        const PolicyParams& policy_snapshot,
                        const EnvSpec& spec, const Question& q) {
  if (r.prm_rewards && r.prm_rewards->size() == r.steps.size()) return;
  std::vector<double> rewards(r.steps.size());
  for (std::size_t i = 0; i < r.steps.size(); ++i)
    rewards[i] = step_reward(prm, policy_snapshot, spec, q,
                             std::span<const Step>(r.steps).first(i),
                             r.steps[i]);
  r.prm_rewards = std::move(rewards);
}

}  // namespace

std::vector<std::vector<double>> airl_step_advantages(
    GroupRollouts& group, const PRMParams& prm,
    const PolicyParams& policy_snapshot, const EnvSpec& spec,
    const Question& q, double floor) {
  const std::size_t g = group.rollouts.size();
  std::vector<double> totals(g, 0.0);
  std::vector<std::vector<double>> rtg(g);
  for (std::size_t k = 0; k < g; ++k) {
    auto& r = group.rollouts[k];
    ensure_prm_rewards(r, prm, policy_snapshot, spec, q);
    const auto& rewards = *r.prm_rewards;
    rtg[k].assign(rewards.size(), 0.0);
    double running = 0.0;
    for (std::size_t i = rewards.size(); i-- > 0;) {
      running += rewards[i];
      rtg[k][i] = running;
    }
    totals[k] = rewards.empty() ? 0.0 : rtg[k][0];
  }

  double baseline = 0.0;
  for (double t : totals) baseline += t;
  baseline /= static_cast<double>(g);
  double var = 0.0;
  for (double t : totals) var += (t - baseline) * (t - baseline);
  var /= static_cast<double>(g);
  const double std_dev = std::sqrt(var);

  std::vector<std::vector<double>> adv(g);
  for (std::size_t k = 0; k < g; ++k) {
    adv[k].assign(rtg[k].size(), 0.0);
    if (std_dev == 0.0) continue;  // identical returns: no preference signal
    for (std::size_t i = 0; i < rtg[k].size(); ++i)
      adv[k][i] = (rtg[k][i] - baseline) / (std_dev + floor);
  }
  return adv;
}

double clipped_term(double ratio, double advantage, double epsilon) {
  const double clipped =
      std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon) * advantage;
  return std::min(ratio * advantage, clipped);
}

double kl_k3(double logp_theta_seq, double logp_ref_seq) {
  const double t = logp_ref_seq - logp_theta_seq;
  return std::expm1(t) - t;  // exp(t) - t - 1, accurate near t == 0
}

namespace {

// Temperature-1 logprobs of every step of a rollout under several snapshots,
// plus the gradient under theta, sharing one featurize pass per step.
struct RolloutEval {
  std::vector<double> logp_theta;
  std::vector<double> logp_old;
  std::vector<double> logp_ref;  // filled only when theta_ref != nullptr
  std::vector<SparseVec> grad_theta;
};

RolloutEval eval_rollout(const Rollout& r, const Question& q,
                         const EnvSpec& spec, const PolicyParams& theta,
                         const PolicyParams& theta_old,
                         const PolicyParams* theta_ref) {
  RolloutEval ev;
  const std::size_t n = r.steps.size();
  ev.logp_theta.resize(n);
  ev.logp_old.resize(n);
  if (theta_ref) ev.logp_ref.resize(n);
  ev.grad_theta.resize(n);

  for (std::size_t i = 0; i < n; ++i) {
    const auto prefix = std::span<const Step>(r.steps).first(i);
    const auto cs = featurized_candidates(spec, q, prefix, theta.dim);
    const int idx = find_candidate(cs.candidates, r.steps[i]);
    if (idx < 0) throw Error("illegal-step");
    const auto ui = static_cast<std::size_t>(idx);

    auto logp_of = [&](const PolicyParams& p) {
      const auto z = candidate_logits(p, cs);
      const double zmax = *std::max_element(z.begin(), z.end());
      double sum = 0.0;
      for (double zi : z) sum += std::exp(zi - zmax);
      return z[ui] - zmax - std::log(sum);
    };
    ev.logp_theta[i] = logp_of(theta);
    ev.logp_old[i] = logp_of(theta_old);
    if (theta_ref) ev.logp_ref[i] = logp_of(*theta_ref);

    const auto probs =
        softmax_over_candidates(candidate_logits(theta, cs), 1.0);
    ev.grad_theta[i] = grad_logprob_from(cs, probs, ui);
  }
  return ev;
}

double sum(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

}  // namespace

SparseVec sparse_add(const SparseVec& a, const SparseVec& b, double alpha) {
  std::vector<Feature> entries(a.begin(), a.end());
  entries.reserve(a.size() + b.size());
  for (const auto& f : b) entries.push_back({f.index, alpha * f.value});
  return merge_sparse(std::move(entries));
}

SparseVec sparse_scale(SparseVec v, double alpha) {
  for (auto& f : v) f.value *= alpha;
  return v;
}

ObjectiveResult j_grpo(const GroupRollouts& group, const Question& q,
                       const EnvSpec& spec, const PolicyParams& theta,
                       const PolicyParams& theta_old,
                       const PolicyParams& theta_ref,
                       const CompositeObjectiveConfig& config) {
  const std::size_t g = group.rollouts.size();
  std::vector<double> rewards(g);
  for (std::size_t k = 0; k < g; ++k)
    rewards[k] = static_cast<double>(group.rollouts[k].outcome_reward);
  const auto adv = grpo_advantages(rewards, config.advantage_floor);

  double value = 0.0;
  double kl_total = 0.0;
  std::vector<Feature> grad_entries;
  for (std::size_t k = 0; k < g; ++k) {
    const auto& r = group.rollouts[k];
    const auto ev = eval_rollout(r, q, spec, theta, theta_old, &theta_ref);
    const double lp_theta = sum(ev.logp_theta);
    const double lp_old = sum(ev.logp_old);
    const double lp_ref = sum(ev.logp_ref);
    if (!std::isfinite(lp_theta) || std::exp(lp_theta) == 0.0)
      throw Error("support-mismatch");

    const double ratio = std::exp(lp_theta - lp_old);
    const double surr = clipped_term(ratio, adv[k], config.clip_epsilon);
    const double t = lp_ref - lp_theta;
    const double kl = std::expm1(t) - t;
    kl_total += kl;
    value += (surr - config.kl_beta * kl) / static_cast<double>(g);

    // Ratio path contributes gradient only where the unclipped branch is
    // active; the k3 path always does.
    double coeff = 0.0;
    const double clipped =
        std::clamp(ratio, 1.0 - config.clip_epsilon, 1.0 + config.clip_epsilon);
    if (ratio * adv[k] <= clipped * adv[k]) coeff += adv[k] * ratio;
    coeff -= config.kl_beta * (1.0 - std::exp(t));
    if (coeff != 0.0) {
      for (const auto& sg : ev.grad_theta)
        for (const auto& f : sg)
          grad_entries.push_back(
              {f.index, coeff * f.value / static_cast<double>(g)});
    }
  }
  return {value, merge_sparse(std::move(grad_entries)),
          kl_total / static_cast<double>(g)};
}

ObjectiveResult j_airl(GroupRollouts& group, const Question& q,
                       const EnvSpec& spec, const PolicyParams& theta,
                       const PolicyParams& theta_old, const PRMParams& prm,
                       const CompositeObjectiveConfig& config) {
  const std::size_t g = group.rollouts.size();
  // Advantages are snapshot quantities of the sampled batch: rewards are
  // evaluated against the sampling policy, never differentiated through.
  const auto adv = airl_step_advantages(group, prm, theta_old, spec, q,
                                        config.advantage_floor);

  double value = 0.0;
  std::vector<Feature> grad_entries;
  for (std::size_t k = 0; k < g; ++k) {
    const auto& r = group.rollouts[k];
    const auto ev = eval_rollout(r, q, spec, theta, theta_old, nullptr);
    if (!std::isfinite(sum(ev.logp_theta)) ||
        std::exp(sum(ev.logp_theta)) == 0.0)
      throw Error("support-mismatch");
    for (std::size_t i = 0; i < r.steps.size(); ++i) {
      const double ratio = std::exp(ev.logp_theta[i] - ev.logp_old[i]);
      value += clipped_term(ratio, adv[k][i], config.clip_epsilon) /
               static_cast<double>(g);
      const double clipped = std::clamp(ratio, 1.0 - config.clip_epsilon,
                                        1.0 + config.clip_epsilon);
      if (ratio * adv[k][i] <= clipped * adv[k][i] && adv[k][i] != 0.0) {
        const double coeff = adv[k][i] * ratio / static_cast<double>(g);
        for (const auto& f : ev.grad_theta[i])
          grad_entries.push_back({f.index, coeff * f.value});
      }
    }
  }
  return {value, merge_sparse(std::move(grad_entries)), 0.0};
}

CompositeResult composite_objective_detailed(
    GroupRollouts& group, const Question& q, const EnvSpec& spec,
    const PolicyParams& theta, const PolicyParams& theta_old,
    const PolicyParams& theta_ref, const PRMParams& prm,
    const CompositeObjectiveConfig& config) {
  CompositeResult out;
  if (config.lambda == 0.0) {
    auto grpo = j_grpo(group, q, spec, theta, theta_old, theta_ref, config);
    out.value = grpo.value;
    out.j_grpo_value = grpo.value;
    out.mean_kl = grpo.mean_kl;
    out.grad = std::move(grpo.grad);
    return out;
  }
  if (config.lambda == 1.0) {
    auto airl = j_airl(group, q, spec, theta, theta_old, prm, config);
    out.value = airl.value;
    out.j_airl_value = airl.value;
    out.grad = std::move(airl.grad);
    return out;
  }
  const auto airl = j_airl(group, q, spec, theta, theta_old, prm, config);
  const auto grpo = j_grpo(group, q, spec, theta, theta_old, theta_ref, config);
  out.value = config.lambda * airl.value + (1.0 - config.lambda) * grpo.value;
  out.j_airl_value = airl.value;
  out.j_grpo_value = grpo.value;
  out.mean_kl = grpo.mean_kl;
  out.grad = sparse_add(sparse_scale(airl.grad, config.lambda), grpo.grad,
                        1.0 - config.lambda);
  return out;
}

ObjectiveResult composite_objective(GroupRollouts& group, const Question& q,
                                    const EnvSpec& spec,
                                    const PolicyParams& theta,
                                    const PolicyParams& theta_old,
                                    const PolicyParams& theta_ref,
                                    const PRMParams& prm,
                                    const CompositeObjectiveConfig& config) {
  auto d = composite_objective_detailed(group, q, spec, theta, theta_old,
                                        theta_ref, prm, config);
  return {d.value, std::move(d.grad), d.mean_kl};
}

}  // namespace steprl
