#include "steprl/policy.hpp"

#include <algorithm>
#include <cmath>

#include "steprl/error.hpp"

namespace steprl {

PolicyParams make_policy(std::uint32_t dim) {
  if (!is_power_of_two(dim)) throw Error("bad-dim", "dim must be a power of two");
  PolicyParams p;
  p.dim = dim;
  p.weights.assign(dim, 0.0);
  return p;
}

CandidateSet featurized_candidates(const EnvSpec& spec, const Question& q,
                                   std::span<const Step> prefix,
                                   std::uint32_t dim) {
  CandidateSet cs;
  cs.candidates = legal_actions(spec, q, prefix);
  cs.features.resize(cs.candidates.size());
  for (std::size_t i = 0; i < cs.candidates.size(); ++i)
    featurize_into(q, prefix, cs.candidates[i].step, dim, cs.features[i]);
  return cs;
}

std::vector<double> candidate_logits(const PolicyParams& params,
                                     const CandidateSet& cs) {
  std::vector<double> z(cs.candidates.size());
  for (std::size_t i = 0; i < z.size(); ++i)
    z[i] = dot(params.weights, cs.features[i]);
  return z;
}

std::vector<double> softmax_over_candidates(std::span<const double> logits,
                                            double temperature) {
  std::vector<double> p(logits.size(), 0.0);
  if (temperature == 0.0) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < logits.size(); ++i)
      if (logits[i] > logits[best]) best = i;
    p[best] = 1.0;
    return p;
  }
  const double zmax = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp((logits[i] - zmax) / temperature);
    sum += p[i];
  }
  for (auto& v : p) v /= sum;
  return p;
}

std::vector<double> step_distribution(const PolicyParams& params,
                                      const EnvSpec& spec, const Question& q,
                                      std::span<const Step> prefix,
                                      double temperature) {
  const auto cs = featurized_candidates(spec, q, prefix, params.dim);
  return softmax_over_candidates(candidate_logits(params, cs), temperature);
}

int find_candidate(std::span<const ActionCandidate> cands, const Step& step) {
  for (std::size_t i = 0; i < cands.size(); ++i)
    if (cands[i].step == step) return static_cast<int>(i);
  return -1;
}

int argmax_terminal(std::span<const ActionCandidate> cands,
                    std::span<const double> logits) {
  int best = -1;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    if (!cands[i].step.is_terminal) continue;
    if (best < 0 || logits[i] > logits[static_cast<std::size_t>(best)])
      best = static_cast<int>(i);
  }
  return best;
}

namespace {

// log softmax at temperature 1 for one index.
double log_softmax_at(std::span<const double> logits, std::size_t idx) {
  const double zmax = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - zmax);
  return logits[idx] - zmax - std::log(sum);
}

}  // namespace

double logprob_step(const PolicyParams& params, const EnvSpec& spec,
                    const Question& q, std::span<const Step> prefix,
                    const Step& step) {
  const auto cs = featurized_candidates(spec, q, prefix, params.dim);
  const int idx = find_candidate(cs.candidates, step);
  if (idx < 0) throw Error("illegal-step");
  return log_softmax_at(candidate_logits(params, cs),
                        static_cast<std::size_t>(idx));
}

SparseVec merge_sparse(std::vector<Feature> entries) {
  std::sort(entries.begin(), entries.end(),
            [](const Feature& a, const Feature& b) { return a.index < b.index; });
  SparseVec out;
  for (std::size_t i = 0; i < entries.size();) {
    const std::uint32_t idx = entries[i].index;
    double sum = 0.0;
    while (i < entries.size() && entries[i].index == idx)
      sum += entries[i++].value;
    if (sum != 0.0) out.push_back({idx, sum});
  }
  return out;
}

SparseVec grad_logprob_from(const CandidateSet& cs,
                            std::span<const double> probs, std::size_t idx) {
  std::vector<Feature> entries(cs.features[idx].begin(),
                               cs.features[idx].end());
  for (std::size_t a = 0; a < cs.candidates.size(); ++a)
    for (const auto& f : cs.features[a])
      entries.push_back({f.index, -probs[a] * f.value});
  return merge_sparse(std::move(entries));
}

SparseVec grad_logprob(const PolicyParams& params, const EnvSpec& spec,
                       const Question& q, std::span<const Step> prefix,
                       const Step& step) {
  const auto cs = featurized_candidates(spec, q, prefix, params.dim);
  const int idx = find_candidate(cs.candidates, step);
  if (idx < 0) throw Error("illegal-step");
  const auto probs =
      softmax_over_candidates(candidate_logits(params, cs), 1.0);
  return grad_logprob_from(cs, probs, static_cast<std::size_t>(idx));
}

Rollout sample_chain(const PolicyParams& params, const EnvSpec& spec,
                     const Question& q, double temperature, Rng& rng) {
  Rollout r;
  r.question_id = q.id;
  const int max_steps = spec.resolved_max_steps();

  while (r.steps.empty() || !r.steps.back().is_terminal) {
    const auto cs = featurized_candidates(spec, q, r.steps, params.dim);
    const auto logits = candidate_logits(params, cs);

    if (static_cast<int>(r.steps.size()) == max_steps) {
      // Out of budget: force the best-scoring terminal declaration.
      const int best = argmax_terminal(cs.candidates, logits);
      Step forced;
      if (best >= 0) {
        forced = cs.candidates[static_cast<std::size_t>(best)].step;
      } else {
        forced.action_id = 0;
        forced.is_terminal = true;
        forced.declared_answer = 0;
      }
      r.steps.push_back(forced);
      r.step_logprobs.push_back(
          best >= 0 ? log_softmax_at(logits, static_cast<std::size_t>(best))
                    : 0.0);
      r.truncated = true;
      break;
    }

    const auto probs = softmax_over_candidates(logits, temperature);
    std::size_t pick;
    if (temperature == 0.0) {
      pick = static_cast<std::size_t>(
          std::max_element(probs.begin(), probs.end()) - probs.begin());
    } else {
      pick = rng.sample_index(probs);
    }
    r.steps.push_back(cs.candidates[pick].step);
    r.step_logprobs.push_back(temperature == 0.0 ? 0.0
                                                 : std::log(probs[pick]));
  }

  r.outcome_reward = check_answer(spec, q, r.steps);
  return r;
}

}  // namespace steprl
