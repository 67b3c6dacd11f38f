#pragma once

#include <functional>
#include <unordered_map>
#include <vector>

#include "steprl/adam.hpp"
#include "steprl/env.hpp"
#include "steprl/objectives.hpp"
#include "steprl/policy.hpp"
#include "steprl/prm.hpp"
#include "steprl/replay_buffer.hpp"

namespace steprl {

struct TrainerConfig {
  std::uint64_t seed = 42;
  int iterations = 300;        // E
  int batch_questions = 64;    // questions per iteration
  double rollout_temperature = 0.7;
  int seed_attempts = 64;      // R rollouts per question when seeding the buffer
  double policy_lr = 0.02;
  double prm_lr = 0.05;
  bool seed_reference = true;  // put each question's reference chain in the
                               // initial buffer (reused existing CoTs)
  int eval_every = 50;
  std::uint32_t dim = 1u << 18;
  std::size_t buffer_capacity = 8192;
  std::size_t per_question_cap = 16;
  int threads = 1;
  CompositeObjectiveConfig objective;
};

struct IterationMetrics {
  int iteration = 0;
  double train_accuracy = 0.0;       // of this iteration's sampled rollouts
  double mean_rollout_length = 0.0;
  double airl_loss = 0.0;
  double j_grpo = 0.0;
  double j_airl = 0.0;
  double mean_kl = 0.0;
  std::size_t buffer_size = 0;
};

struct EvalMetrics {
  int iteration = 0;
  double accuracy = 0.0;      // temperature-0 Accuracy@1
  double mean_length = 0.0;
};

// Algorithm state: current policy, the sampling snapshot, the frozen
// reference, the PRM, and the replay buffer. theta_ref never changes after
// init; theta_old trails theta by exactly one update.
struct TrainerState {
  TrainerConfig config;
  EnvSpec env;
  std::vector<Question> questions;
  std::unordered_map<QuestionId, std::size_t> question_index;

  PolicyParams theta, theta_old, theta_ref;
  PRMParams prm;
  ReplayBuffer buffer;
  AdamState policy_opt, prm_opt;
  int iteration = 0;
  std::vector<QuestionId> uncovered;  // no correct rollout during seeding

  const Question& question(QuestionId id) const;
};

// Zero-initializes all parameter vectors and seeds the buffer with correct
// rollouts (seed_attempts tries per question at the rollout temperature).
// Throws Error("unlearnable-seed") when no question produced a single
// correct rollout.
TrainerState init_run(const TrainerConfig& config, const EnvSpec& env,
                      std::vector<Question> question_set);

// One pass of the training loop: sample a question batch from the buffer,
// roll out G chains per question from theta_old, one PRM step on the AIRL
// loss (buffer references vs fresh rollouts, balanced step counts), one
// policy step ascending the composite objective, refresh theta_old, grow the
// buffer, emit metrics.
IterationMetrics train_iteration(TrainerState& state);

// Temperature-0 accuracy and mean chain length over a question set.
EvalMetrics evaluate(const TrainerState& state, int iteration,
                     std::span<const Question> questions);

struct RunHooks {
  std::function<void(const IterationMetrics&)> on_iteration;
  std::function<void(const EvalMetrics&)> on_eval;
  // Called at each evaluation point and once at the end.
  std::function<void(const TrainerState&, int iteration, bool final)>
      on_checkpoint;
};

struct RunResult {
  std::vector<IterationMetrics> iterations;
  std::vector<EvalMetrics> evals;
};

// Runs E iterations, evaluating every eval_every (and writing checkpoints at
// each evaluation and at the end). Throws Error("bad-run") for E < 1.
RunResult run(TrainerState& state, int total_iterations,
              std::span<const Question> validation_set, int eval_every,
              const RunHooks& hooks = {});

}  // namespace steprl
