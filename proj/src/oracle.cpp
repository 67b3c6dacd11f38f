#include "steprl/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "steprl/error.hpp"

namespace steprl {

namespace {

void enumerate_rec(const EnvSpec& spec, const Question& q,
                   const PolicyParams& policy, double temperature,
                   std::vector<Step>& prefix, double logp, int max_steps,
                   EnumerationResult& out) {
  if (!prefix.empty() && prefix.back().is_terminal) {
    out.chains.push_back(prefix);
    out.probabilities.push_back(std::exp(logp));
    out.correct.push_back(check_answer(spec, q, prefix));
    return;
  }
  if (static_cast<int>(prefix.size()) == max_steps) {
    // Mirrors the sampler's forced-terminal fallback so probabilities still
    // sum to one when max_steps is tight.
    const auto cs = featurized_candidates(spec, q, prefix, policy.dim);
    const int best = argmax_terminal(cs.candidates,
                                     candidate_logits(policy, cs));
    Step forced;
    if (best >= 0) {
      forced = cs.candidates[static_cast<std::size_t>(best)].step;
    } else {
      forced.is_terminal = true;
    }
    prefix.push_back(forced);
    out.chains.push_back(prefix);
    out.probabilities.push_back(std::exp(logp));
    out.correct.push_back(check_answer(spec, q, prefix));
    prefix.pop_back();
    return;
  }
  const auto cs = featurized_candidates(spec, q, prefix, policy.dim);
  const auto probs = softmax_over_candidates(candidate_logits(policy, cs),
                                             temperature);
  for (std::size_t i = 0; i < cs.candidates.size(); ++i) {
    if (probs[i] == 0.0) continue;  // temperature-0 point mass
    prefix.push_back(cs.candidates[i].step);
    enumerate_rec(spec, q, policy, temperature, prefix,
                  logp + std::log(probs[i]), max_steps, out);
    prefix.pop_back();
  }
}

}  // namespace

EnumerationResult enumerate_all_chains(const EnvSpec& spec, const Question& q,
                                       const PolicyParams& policy,
                                       double temperature, std::size_t guard) {
  const int max_steps = spec.resolved_max_steps();
  const std::size_t space =
      legal_actions(spec, q, {}).size();
  double bound = 1.0;
  for (int i = 0; i < max_steps; ++i) {
    bound *= static_cast<double>(space);
    if (bound > static_cast<double>(guard))
      throw Error("too-large-to-enumerate");
  }
  EnumerationResult out;
  std::vector<Step> prefix;
  enumerate_rec(spec, q, policy, temperature, prefix, 0.0, max_steps, out);
  return out;
}

double exact_success_prob(const EnvSpec& spec, const Question& q,
                          const PolicyParams& policy, double temperature) {
  const auto e = enumerate_all_chains(spec, q, policy, temperature);
  double p = 0.0;
  for (std::size_t i = 0; i < e.chains.size(); ++i)
    if (e.correct[i]) p += e.probabilities[i];
  return p;
}

Answer aggregate_answers_direct(std::span<const Answer> answers,
                                std::span<const double> scores,
                                AnswerAgg mode) {
  std::map<Answer, double> table;
  for (std::size_t i = 0; i < answers.size(); ++i) {
    switch (mode) {
      case AnswerAgg::sum:
        table[answers[i]] += scores[i];
        break;
      case AnswerAgg::max: {
        auto [it, fresh] = table.try_emplace(answers[i], scores[i]);
        if (!fresh && scores[i] > it->second) it->second = scores[i];
        break;
      }
      case AnswerAgg::majority:
        table[answers[i]] += 1.0;
        break;
    }
  }
  Answer best = table.begin()->first;
  double best_v = table.begin()->second;
  for (const auto& [a, v] : table) {
    if (v > best_v) {
      best = a;
      best_v = v;
    }
  }
  return best;
}

namespace {

struct ChainClass {
  Answer answer;
  double score;
  double prob;
};

// Recursively distributes n draws over the classes, accumulating
// multinomial-weighted accuracy of the aggregated pick.
void multiset_rec(const std::vector<ChainClass>& classes, std::size_t idx,
                  int remaining, double weight,
                  std::vector<int>& counts, Answer truth, AnswerAgg mode,
                  double& accuracy) {
  if (idx + 1 == classes.size()) {
    counts[idx] = remaining;
    double w = weight;
    for (int j = 0; j < remaining; ++j)
      w *= classes[idx].prob * static_cast<double>(remaining - j) /
           static_cast<double>(j + 1);
    if (w > 0.0) {
      std::vector<Answer> answers;
      std::vector<double> scores;
      for (std::size_t c = 0; c < classes.size(); ++c) {
        for (int j = 0; j < counts[c]; ++j) {
          answers.push_back(classes[c].answer);
          scores.push_back(classes[c].score);
        }
      }
      if (aggregate_answers_direct(answers, scores, mode) == truth)
        accuracy += w;
    }
    counts[idx] = 0;
    return;
  }
  // weight carries the running multinomial coefficient times probabilities:
  // choose(k_left, c) * p^c folded in incrementally.
  double w = weight;
  for (int c = 0; c <= remaining; ++c) {
    counts[idx] = c;
    if (c > 0)
      w *= classes[idx].prob * static_cast<double>(remaining - c + 1) /
           static_cast<double>(c);
    multiset_rec(classes, idx + 1, remaining - c, w, counts, truth, mode,
                 accuracy);
  }
  counts[idx] = 0;
}

}  // namespace

double exact_best_of_n_accuracy(const EnvSpec& spec, const Question& q,
                                const PolicyParams& policy, double temperature,
                                const StepScorer& scorer, int n,
                                StepAgg step_agg, AnswerAgg answer_agg) {
  const auto e = enumerate_all_chains(spec, q, policy, temperature);
  if (n > 6 && e.chains.size() > 200)
    throw Error("too-large-to-enumerate", "multinomial guard");

  // Collapse chains into (answer, step-score) classes.
  std::map<std::pair<Answer, double>, double> class_prob;
  for (std::size_t i = 0; i < e.chains.size(); ++i) {
    const auto& chain = e.chains[i];
    std::vector<double> rewards(chain.size());
    for (std::size_t s = 0; s < chain.size(); ++s)
      rewards[s] = scorer(q, std::span<const Step>(chain).first(s), chain[s]);
    const double score = step_aggregate(rewards, step_agg);
    class_prob[{chain.back().declared_answer, score}] += e.probabilities[i];
  }
  std::vector<ChainClass> classes;
  for (const auto& [key, p] : class_prob)
    classes.push_back({key.first, key.second, p});

  // Multiset count guard: C(classes + n - 1, n).
  double combos = 1.0;
  for (int j = 1; j <= n; ++j)
    combos *= static_cast<double>(classes.size() + static_cast<std::size_t>(n) - j) /
              static_cast<double>(j);
  if (combos > 2e6) throw Error("too-large-to-enumerate", "multiset guard");

  double accuracy = 0.0;
  std::vector<int> counts(classes.size(), 0);
  multiset_rec(classes, 0, n, 1.0, counts, q.ground_truth, answer_agg,
               accuracy);
  return accuracy;
}

std::vector<double> optimal_discriminator_table(
    std::span<const double> expert_dist, std::span<const double> policy_dist) {
  std::vector<double> out(expert_dist.size(), 0.0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double denom = expert_dist[i] + policy_dist[i];
    out[i] = denom > 0.0 ? expert_dist[i] / denom : 0.0;
  }
  return out;
}

std::vector<double> finite_difference_grad(
    const std::function<double(std::span<const double>)>& objective,
    std::span<double> params, std::span<const std::uint32_t> active,
    double h) {
  std::vector<double> grad(active.size(), 0.0);
  for (std::size_t i = 0; i < active.size(); ++i) {
    const auto idx = active[i];
    const double saved = params[idx];
    params[idx] = saved + h;
    const double fp = objective(params);
    params[idx] = saved - h;
    const double fm = objective(params);
    params[idx] = saved;
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

}  // namespace steprl
