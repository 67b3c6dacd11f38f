#include "steprl/prm.hpp"

#include <cmath>

#include "steprl/adam.hpp"
#include "steprl/error.hpp"

namespace steprl {

namespace {

// log(exp(a) + exp(b)) without overflow.
double logaddexp(double a, double b) {
  const double hi = a > b ? a : b;
  const double lo = a > b ? b : a;
  return hi + std::log1p(std::exp(lo - hi));
}

}  // namespace

PRMParams make_prm(std::uint32_t dim) {
  if (!is_power_of_two(dim)) throw Error("bad-dim", "dim must be a power of two");
  PRMParams p;
  p.dim = dim;
  p.weights.assign(dim, 0.0);
  return p;
}

double score_f(const PRMParams& prm, const Question& q,
               std::span<const Step> prefix_including_step) {
  if (prefix_including_step.empty())
    throw Error("empty-prefix", "score_f needs at least the step being scored");
  const auto prefix = prefix_including_step.first(prefix_including_step.size() - 1);
  const auto fv = featurize(q, prefix, prefix_including_step.back(), prm.dim);
  return dot(prm.weights, fv);
}

double log_discriminator(double f_value, double policy_logprob) {
  return f_value - logaddexp(f_value, policy_logprob);
}

double log_one_minus_discriminator(double f_value, double policy_logprob) {
  return policy_logprob - logaddexp(f_value, policy_logprob);
}

double discriminator(double f_value, double policy_logprob) {
  return std::exp(log_discriminator(f_value, policy_logprob));
}

double step_reward(const PRMParams& prm, const PolicyParams& policy,
                   const EnvSpec& spec, const Question& q,
                   std::span<const Step> prefix, const Step& step) {
  std::vector<Step> with_step(prefix.begin(), prefix.end());
  with_step.push_back(step);
  return score_f(prm, q, with_step) -
         logprob_step(policy, spec, q, prefix, step);
}

void append_step_samples(const Question& q, const Rollout& r,
                         std::vector<StepSample>& out) {
  for (std::size_t i = 0; i < r.steps.size(); ++i)
    out.push_back({&q, std::span<const Step>(r.steps).first(i), r.steps[i]});
}

namespace {

struct DiscriminatorEval {
  double f = 0.0;
  double logp = 0.0;
  FeatureVector features;
};

DiscriminatorEval eval_sample(const PRMParams& prm, const PolicyParams& policy,
                              const EnvSpec& spec, const StepSample& s) {
  DiscriminatorEval e;
  featurize_into(*s.question, s.prefix, s.step, prm.dim, e.features);
  e.f = dot(prm.weights, e.features);
  e.logp = logprob_step(policy, spec, *s.question, s.prefix, s.step);
  return e;
}

}  // namespace

std::pair<double, SparseVec> airl_loss_with_grad(
    const PRMParams& prm, const PolicyParams& policy, const EnvSpec& spec,
    std::span<const StepSample> expert_steps,
    std::span<const StepSample> policy_steps) {
  if (expert_steps.empty() || policy_steps.empty())
    throw Error("empty-batch", "airl loss needs both expert and policy steps");
  double loss = 0.0;
  std::vector<Feature> entries;
  const double ne = static_cast<double>(expert_steps.size());
  const double np = static_cast<double>(policy_steps.size());
  for (const auto& s : expert_steps) {
    const auto e = eval_sample(prm, policy, spec, s);
    loss += -log_discriminator(e.f, e.logp) / ne;
    const double d = discriminator(e.f, e.logp);
    for (const auto& f : e.features)
      entries.push_back({f.index, -(1.0 - d) * f.value / ne});
  }
  for (const auto& s : policy_steps) {
    const auto e = eval_sample(prm, policy, spec, s);
    loss += -log_one_minus_discriminator(e.f, e.logp) / np;
    const double d = discriminator(e.f, e.logp);
    for (const auto& f : e.features)
      entries.push_back({f.index, d * f.value / np});
  }
  return {loss, merge_sparse(std::move(entries))};
}

double airl_loss(const PRMParams& prm, const PolicyParams& policy,
                 const EnvSpec& spec, std::span<const StepSample> expert_steps,
                 std::span<const StepSample> policy_steps) {
  if (expert_steps.empty() || policy_steps.empty())
    throw Error("empty-batch", "airl_loss needs both expert and policy steps");
  double loss = 0.0;
  for (const auto& s : expert_steps) {
    const auto e = eval_sample(prm, policy, spec, s);
    loss += -log_discriminator(e.f, e.logp) /
            static_cast<double>(expert_steps.size());
  }
  for (const auto& s : policy_steps) {
    const auto e = eval_sample(prm, policy, spec, s);
    loss += -log_one_minus_discriminator(e.f, e.logp) /
            static_cast<double>(policy_steps.size());
  }
  return loss;
}

SparseVec airl_loss_grad(const PRMParams& prm, const PolicyParams& policy,
                         const EnvSpec& spec,
                         std::span<const StepSample> expert_steps,
                         std::span<const StepSample> policy_steps) {
  return airl_loss_with_grad(prm, policy, spec, expert_steps, policy_steps)
      .second;
}

void prm_update(PRMParams& prm, const SparseVec& gradient, AdamState& state,
                double learning_rate) {
  AdamConfig cfg;
  cfg.lr = learning_rate;
  adam_step(prm.weights, gradient, state, cfg);
  ++prm.version;
}

}  // namespace steprl
