#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace steprl {

using QuestionId = std::int64_t;
using Answer = std::int64_t;

// A single task instance. ground_truth is visible only to the outcome
// verifier and the oracles, never to the policy or the PRM.
struct Question {
  QuestionId id = 0;
  std::string env_id;
  std::vector<std::int64_t> payload;
  Answer ground_truth = 0;
};

// One reasoning step. declared_answer is meaningful iff is_terminal.
struct Step {
  std::int64_t action_id = 0;
  bool is_terminal = false;
  Answer declared_answer = 0;

  friend bool operator==(const Step& a, const Step& b) {
    if (a.action_id != b.action_id || a.is_terminal != b.is_terminal)
      return false;
    return !a.is_terminal || a.declared_answer == b.declared_answer;
  }
};

// A complete chain sampled for one question. step_logprobs are natural logs
// recorded under the sampling policy at the sampling temperature.
struct Rollout {
  QuestionId question_id = 0;
  std::vector<Step> steps;
  std::vector<double> step_logprobs;
  int outcome_reward = 0;  // 0 or 1
  bool truncated = false;
  std::optional<std::vector<double>> prm_rewards;  // cache, never persisted

  Answer final_answer() const {
    return steps.empty() ? Answer{-1} : steps.back().declared_answer;
  }

  friend bool same_steps(const Rollout& a, const Rollout& b) {
    return a.question_id == b.question_id && a.steps == b.steps;
  }
};

}  // namespace steprl
