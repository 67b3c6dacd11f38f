#include "steprl/search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <set>

#include "steprl/error.hpp"

namespace steprl {

StepAgg step_agg_from_name(const std::string& name) {
  if (name == "min") return StepAgg::min;
  if (name == "last") return StepAgg::last;
  throw Error("bad-aggregation", "unknown step aggregation '" + name + "'");
}

AnswerAgg answer_agg_from_name(const std::string& name) {
  if (name == "max") return AnswerAgg::max;
  if (name == "sum") return AnswerAgg::sum;
  if (name == "majority") return AnswerAgg::majority;
  throw Error("bad-aggregation", "unknown answer aggregation '" + name + "'");
}

StepScorer make_prm_scorer(const PRMParams& prm,
                           const PolicyParams& frozen_policy,
                           const EnvSpec& spec) {
  return [&prm, &frozen_policy, spec](const Question& q,
                                      std::span<const Step> prefix,
                                      const Step& step) {
    return step_reward(prm, frozen_policy, spec, q, prefix, step);
  };
}

StepScorer make_oracle_scorer(const EnvSpec& spec) {
  return [spec](const Question& q, std::span<const Step> prefix,
                const Step& step) {
    return static_cast<double>(step_correct(spec, q, prefix, step));
  };
}

double step_aggregate(std::span<const double> prm_rewards, StepAgg mode) {
  if (prm_rewards.empty()) throw Error("empty-rewards");
  if (mode == StepAgg::last) return prm_rewards.back();
  return *std::min_element(prm_rewards.begin(), prm_rewards.end());
}

Answer answer_aggregate(std::span<const CandidateSolution> solutions,
                        AnswerAgg mode) {
  if (solutions.empty()) throw Error("empty-solutions");

  // std::map keys are ascending, so "first strictly-greater wins" breaks
  // ties toward the smallest answer token.
  std::map<Answer, double> score;
  std::map<Answer, std::size_t> freq;
  for (const auto& s : solutions) {
    freq[s.answer] += 1;
    switch (mode) {
      case AnswerAgg::sum:
        score[s.answer] += s.step_score;
        break;
      case AnswerAgg::max: {
        auto [it, inserted] = score.try_emplace(s.answer, s.step_score);
        if (!inserted) it->second = std::max(it->second, s.step_score);
        break;
      }
      case AnswerAgg::majority:
        break;
    }
  }

  if (mode == AnswerAgg::majority) {
    Answer best = freq.begin()->first;
    std::size_t best_n = freq.begin()->second;
    for (const auto& [a, n] : freq) {
      if (n > best_n) {
        best = a;
        best_n = n;
      }
    }
    return best;
  }

  Answer best = score.begin()->first;
  double best_s = score.begin()->second;
  for (const auto& [a, s] : score) {
    if (s > best_s) {
      best = a;
      best_s = s;
    }
  }
  return best;
}

double uct_score(double mu, std::uint64_t n_parent, std::uint64_t n_node,
                 double alpha) {
  if (n_node == 0) return std::numeric_limits<double>::infinity();
  return mu + alpha * std::sqrt(std::log(static_cast<double>(n_parent)) /
                                static_cast<double>(n_node));
}

CandidateSolution score_solution(const StepScorer& scorer, const Question& q,
                                 std::span<const Step> chain, StepAgg mode) {
  CandidateSolution s;
  s.chain.assign(chain.begin(), chain.end());
  s.prm_rewards.resize(chain.size());
  for (std::size_t i = 0; i < chain.size(); ++i)
    s.prm_rewards[i] = scorer(q, chain.first(i), chain[i]);
  s.step_score = step_aggregate(s.prm_rewards, mode);
  s.answer = chain.back().declared_answer;
  return s;
}

std::vector<Rollout> sample_n_chains(const PolicyParams& policy,
                                     const EnvSpec& spec, const Question& q,
                                     int n, double temperature, Rng& rng) {
  std::vector<Rollout> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    out.push_back(sample_chain(policy, spec, q, temperature, rng));
  return out;
}

SearchOutcome best_of_n(const PolicyParams& policy, const StepScorer& scorer,
                        const EnvSpec& spec, const Question& q,
                        const SearchConfig& config, Rng& rng) {
  SearchOutcome out;
  const auto rollouts =
      sample_n_chains(policy, spec, q, config.n, config.temperature, rng);
  for (const auto& r : rollouts)
    out.solutions.push_back(
        score_solution(scorer, q, r.steps, config.step_agg));
  out.rollout_count = rollouts.size();
  out.answer = answer_aggregate(out.solutions, config.answer_agg);
  return out;
}

Answer self_consistency(const PolicyParams& policy, const EnvSpec& spec,
                        const Question& q, int n, double temperature,
                        Rng& rng) {
  const auto rollouts = sample_n_chains(policy, spec, q, n, temperature, rng);
  std::vector<CandidateSolution> sols(rollouts.size());
  for (std::size_t i = 0; i < rollouts.size(); ++i) {
    sols[i].answer = rollouts[i].final_answer();
    sols[i].chain = rollouts[i].steps;
  }
  return answer_aggregate(sols, AnswerAgg::majority);
}

// ---------------------------------------------------------------------------
// Beam search (BFS-V)
// ---------------------------------------------------------------------------

namespace {

struct BeamItem {
  std::vector<Step> prefix;
  double last_reward = 0.0;
};

// Completes a partial chain greedily (temperature 0).
std::vector<Step> force_finish(const PolicyParams& policy, const EnvSpec& spec,
                               const Question& q, std::vector<Step> prefix) {
  Rng dummy(0);
  while (prefix.empty() || !prefix.back().is_terminal) {
    const auto cs = featurized_candidates(spec, q, prefix, policy.dim);
    const auto probs =
        softmax_over_candidates(candidate_logits(policy, cs), 0.0);
    const auto pick = static_cast<std::size_t>(
        std::max_element(probs.begin(), probs.end()) - probs.begin());
    prefix.push_back(cs.candidates[pick].step);
  }
  return prefix;
}

}  // namespace

SearchOutcome beam_search(const PolicyParams& policy, const StepScorer& scorer,
                          const EnvSpec& spec, const Question& q,
                          const SearchConfig& config, Rng& rng) {
  if (config.m <= 0 || config.n % config.m != 0) throw Error("beam-shape");
  const std::size_t n = static_cast<std::size_t>(config.n);
  const std::size_t keep = n / static_cast<std::size_t>(config.m);

  SearchOutcome out;

  // Initial proposals: n sampled first steps from the root.
  std::vector<BeamItem> proposals;
  for (std::size_t i = 0; i < n; ++i) {
    Rollout r;
    const auto cs = featurized_candidates(spec, q, {}, policy.dim);
    const auto probs = softmax_over_candidates(candidate_logits(policy, cs),
                                               config.temperature);
    const std::size_t pick = config.temperature == 0.0
                                 ? static_cast<std::size_t>(
                                       std::max_element(probs.begin(),
                                                        probs.end()) -
                                       probs.begin())
                                 : rng.sample_index(probs);
    BeamItem item;
    item.prefix = {cs.candidates[pick].step};
    proposals.push_back(std::move(item));
  }

  const int max_rounds = spec.resolved_max_steps() + 1;
  for (int round = 0; round < max_rounds && out.solutions.size() < n;
       ++round) {
    // Score every proposal by its latest step's reward.
    for (auto& item : proposals) {
      const auto prefix =
          std::span<const Step>(item.prefix).first(item.prefix.size() - 1);
      item.last_reward = scorer(q, prefix, item.prefix.back());
    }

    // Terminal proposals retire to the finished set; their slot is not
    // expanded.
    std::vector<BeamItem> open;
    for (auto& item : proposals) {
      if (item.prefix.back().is_terminal) {
        if (out.solutions.size() < n)
          out.solutions.push_back(
              score_solution(scorer, q, item.prefix, config.step_agg));
      } else {
        open.push_back(std::move(item));
      }
    }
    if (out.solutions.size() >= n || open.empty()) break;

    // Retain the top n/m survivors (stable: generation order on ties).
    std::stable_sort(open.begin(), open.end(),
                     [](const BeamItem& a, const BeamItem& b) {
                       return a.last_reward > b.last_reward;
                     });
    if (open.size() > keep) open.resize(keep);

    // Expand each survivor by m sampled next steps.
    std::vector<BeamItem> next;
    for (const auto& item : open) {
      const auto cs = featurized_candidates(spec, q, item.prefix, policy.dim);
      const auto probs = softmax_over_candidates(candidate_logits(policy, cs),
                                                 config.temperature);
      for (int j = 0; j < config.m; ++j) {
        const std::size_t pick = config.temperature == 0.0
                                     ? static_cast<std::size_t>(
                                           std::max_element(probs.begin(),
                                                            probs.end()) -
                                           probs.begin())
                                     : rng.sample_index(probs);
        BeamItem child;
        child.prefix = item.prefix;
        child.prefix.push_back(cs.candidates[pick].step);
        next.push_back(std::move(child));
      }
    }
    proposals = std::move(next);
  }

  // Pad with the best remaining partials forced to completion at
  // temperature 0 (only reachable when the loop stalls before n finished).
  if (out.solutions.size() < n) {
    for (auto& item : proposals) {
      if (out.solutions.size() >= n) break;
      if (item.prefix.back().is_terminal) continue;
      const auto full = force_finish(policy, spec, q, item.prefix);
      out.solutions.push_back(
          score_solution(scorer, q, full, config.step_agg));
    }
  }

  out.rollout_count = out.solutions.size();
  out.answer = answer_aggregate(out.solutions, config.answer_agg);
  return out;
}

// ---------------------------------------------------------------------------
// MCTS
// ---------------------------------------------------------------------------

namespace {

struct TreeNode {
  Step step;                // undefined for the root
  double step_rw = 0.0;     // scorer value of `step` (cached)
  bool terminal = false;
  bool expanded = false;
  bool exhausted = false;   // subtree fully enumerated
  std::uint64_t visits = 0;
  std::uint64_t own_sims = 0;  // simulations launched at this node
  double value_sum = 0.0;
  std::vector<std::unique_ptr<TreeNode>> children;

  double mu() const {
    return value_sum / static_cast<double>(std::max<std::uint64_t>(visits, 1));
  }

  // Visit counts must always decompose as own simulations plus the
  // children's counts; violations indicate a bookkeeping bug.
  bool visits_consistent() const {
    std::uint64_t sum = own_sims;
    for (const auto& c : children) sum += c->visits;
    return visits == sum;
  }
};

// Samples up to m distinct candidate indices: all of them when the space is
// small, otherwise weighted draws without replacement.
std::vector<std::size_t> sample_distinct(std::span<const double> probs, int m,
                                         double temperature, Rng& rng) {
  std::vector<std::size_t> picks;
  const std::size_t count = probs.size();
  if (count <= static_cast<std::size_t>(m)) {
    picks.resize(count);
    for (std::size_t i = 0; i < count; ++i) picks[i] = i;
    return picks;
  }
  std::vector<double> w(probs.begin(), probs.end());
  for (int j = 0; j < m; ++j) {
    std::size_t pick;
    if (temperature == 0.0) {
      pick = static_cast<std::size_t>(
          std::max_element(w.begin(), w.end()) - w.begin());
    } else {
      pick = rng.sample_index(w);
    }
    picks.push_back(pick);
    w[pick] = 0.0;
  }
  return picks;
}

}  // namespace

SearchOutcome mcts(const PolicyParams& policy, const StepScorer& scorer,
                   const EnvSpec& spec, const Question& q,
                   const SearchConfig& config, Rng& rng) {
  SearchOutcome out;
  auto root = std::make_unique<TreeNode>();

  // Distinct chains collected so far, keyed by the action path.
  std::set<std::vector<std::int64_t>> seen;
  auto collect = [&](const std::vector<Step>& chain) {
    std::vector<std::int64_t> key(chain.size());
    for (std::size_t i = 0; i < chain.size(); ++i) key[i] = chain[i].action_id;
    if (!seen.insert(std::move(key)).second) return;
    out.solutions.push_back(
        score_solution(scorer, q, chain, config.step_agg));
  };

  // Greedy continuation; returns the simulated suffix value (sum of step
  // rewards from `from_step` through the terminal step) and the full chain.
  auto simulate = [&](std::vector<Step> prefix, double entry_reward) {
    double value = entry_reward;
    while (!prefix.back().is_terminal) {
      const auto cs = featurized_candidates(spec, q, prefix, policy.dim);
      const auto probs =
          softmax_over_candidates(candidate_logits(policy, cs), 0.0);
      const auto pick = static_cast<std::size_t>(
          std::max_element(probs.begin(), probs.end()) - probs.begin());
      const Step next = cs.candidates[pick].step;
      value += scorer(q, prefix, next);
      prefix.push_back(next);
    }
    return std::pair<double, std::vector<Step>>(value, std::move(prefix));
  };

  while (out.solutions.size() < static_cast<std::size_t>(config.n) &&
         !root->exhausted) {
    // Selection: descend by UCT among non-exhausted children.
    std::vector<TreeNode*> path{root.get()};
    std::vector<Step> prefix;
    TreeNode* node = root.get();
    while (node->expanded) {
      TreeNode* best = nullptr;
      double best_score = -std::numeric_limits<double>::infinity();
      for (const auto& child : node->children) {
        if (child->exhausted) continue;
        const double s =
            uct_score(child->mu(), std::max<std::uint64_t>(node->visits, 1),
                      child->visits, config.uct_alpha);
        if (best == nullptr || s > best_score) {
          best = child.get();
          best_score = s;
        }
      }
      if (best == nullptr) {  // every subtree below is done
        node->exhausted = true;
        break;
      }
      node = best;
      path.push_back(node);
      prefix.push_back(node->step);
    }
    if (node->exhausted && node == root.get()) break;
    if (node->exhausted) continue;  // propagate exhaustion upward next pass

    double backup_total = 0.0;
    std::uint64_t backup_count = 0;

    if (node->terminal) {
      // Terminal leaf reached by selection: the chain itself is the
      // simulation; value is its own step reward. The path backup below
      // covers this node's visit.
      collect(prefix);
      backup_total = node->step_rw;
      backup_count = 1;
      node->own_sims += 1;
      node->exhausted = true;
    } else {
      // Expansion: up to m distinct children, each simulated once.
      const auto cs = featurized_candidates(spec, q, prefix, policy.dim);
      const auto probs = softmax_over_candidates(candidate_logits(policy, cs),
                                                 config.temperature);
      const auto picks =
          sample_distinct(probs, config.m, config.temperature, rng);
      node->expanded = true;
      for (const auto pick : picks) {
        auto child = std::make_unique<TreeNode>();
        child->step = cs.candidates[pick].step;
        child->terminal = child->step.is_terminal;
        child->step_rw = scorer(q, prefix, child->step);
        node->children.push_back(std::move(child));
      }
      std::sort(node->children.begin(), node->children.end(),
                [](const auto& a, const auto& b) {
                  return a->step.action_id < b->step.action_id;
                });

      for (const auto& child : node->children) {
        std::vector<Step> child_prefix = prefix;
        child_prefix.push_back(child->step);
        if (child->terminal) {
          collect(child_prefix);
          child->visits += 1;
          child->own_sims += 1;
          child->value_sum += child->step_rw;
          child->exhausted = true;
          backup_total += child->step_rw;
          backup_count += 1;
        } else {
          auto [value, chain] = simulate(child_prefix, child->step_rw);
          collect(chain);
          child->visits += 1;
          child->own_sims += 1;
          child->value_sum += value;
          backup_total += value;
          backup_count += 1;
        }
        if (out.solutions.size() >= static_cast<std::size_t>(config.n)) break;
      }
    }

    // Backpropagation along the selection path.
    for (auto* p : path) {
      p->visits += backup_count;
      p->value_sum += backup_total;
    }
    for (auto* p : path) {
      if (!p->visits_consistent()) throw Error("mcts-invariant");
    }

    // Exhaustion propagates toward the root.
    for (std::size_t i = path.size(); i-- > 0;) {
      TreeNode* p = path[i];
      if (p->expanded && !p->exhausted) {
        p->exhausted = std::all_of(
            p->children.begin(), p->children.end(),
            [](const auto& c) { return c->exhausted; });
      }
    }
  }

  out.rollout_count = out.solutions.size();
  out.answer = answer_aggregate(out.solutions, config.answer_agg);
  return out;
}

}  // namespace steprl
