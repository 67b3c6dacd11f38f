#include "steprl/trainer.hpp"

#include <algorithm>
#include <cmath>

#include "steprl/error.hpp"
#include "steprl/parallel.hpp"

namespace steprl {

const Question& TrainerState::question(QuestionId id) const {
  const auto it = question_index.find(id);
  if (it == question_index.end())
    throw Error("unknown-question", std::to_string(id));
  return questions[it->second];
}

TrainerState init_run(const TrainerConfig& config, const EnvSpec& env,
                      std::vector<Question> question_set) {
  env.validate();
  if (question_set.empty())
    throw Error("empty-question-set", "init_run needs at least one question");

  TrainerState st{config,
                  env,
                  std::move(question_set),
                  {},
                  make_policy(config.dim),
                  make_policy(config.dim),
                  make_policy(config.dim),
                  make_prm(config.dim),
                  ReplayBuffer(config.buffer_capacity, config.per_question_cap),
                  AdamState(config.dim),
                  AdamState(config.dim),
                  0,
                  {}};
  for (std::size_t i = 0; i < st.questions.size(); ++i)
    st.question_index[st.questions[i].id] = i;

  // Seed the buffer: the question's reference chain (a reused existing CoT)
  // plus R sampled attempts, correct rollouts kept.
  std::vector<std::vector<Rollout>> found(st.questions.size());
  parallel_for(st.questions.size(), config.threads, [&](std::size_t i) {
    const auto& q = st.questions[i];
    if (config.seed_reference) {
      Rollout ref;
      ref.question_id = q.id;
      ref.steps = reference_solution(st.env, q);
      for (std::size_t s = 0; s < ref.steps.size(); ++s)
        ref.step_logprobs.push_back(
            logprob_step(st.theta, st.env, q,
                         std::span<const Step>(ref.steps).first(s),
                         ref.steps[s]));
      ref.outcome_reward = check_answer(st.env, q, ref.steps);
      found[i].push_back(std::move(ref));
    }
    auto rng = Rng::stream(config.seed, "buffer-seed",
                           static_cast<std::uint64_t>(q.id));
    for (int a = 0; a < config.seed_attempts; ++a) {
      auto r = sample_chain(st.theta, st.env, q, config.rollout_temperature,
                            rng);
      if (r.outcome_reward == 1) found[i].push_back(std::move(r));
    }
  });
  for (std::size_t i = 0; i < st.questions.size(); ++i) {
    bool covered = false;
    for (const auto& r : found[i]) covered |= st.buffer.insert(r);
    if (!covered) st.uncovered.push_back(st.questions[i].id);
  }
  if (st.buffer.size() == 0)
    throw Error("unlearnable-seed",
                "no correct rollout found for any question; try an easier "
                "environment spec");
  return st;
}

namespace {

struct GroupWork {
  GroupRollouts group;
  const Question* question = nullptr;
  CompositeResult objective;
  std::vector<StepSample> policy_steps;
  std::vector<StepSample> expert_steps;
};

}  // namespace

IterationMetrics train_iteration(TrainerState& state) {
  const auto& cfg = state.config;
  const int iter = state.iteration + 1;
  const int G = cfg.objective.group_size;

  auto batch_rng = Rng::stream(cfg.seed, "question-batch",
                               static_cast<std::uint64_t>(iter));
  const auto qids = state.buffer.sample_question_ids(
      static_cast<std::size_t>(cfg.batch_questions), batch_rng);

  // Rollouts from the sampling snapshot, one stream per (iteration, qid).
  std::vector<GroupWork> work(qids.size());
  parallel_for(qids.size(), cfg.threads, [&](std::size_t i) {
    auto& w = work[i];
    w.question = &state.question(qids[i]);
    w.group.question_id = qids[i];
    auto rng = Rng::stream(cfg.seed, "train-rollout",
                           static_cast<std::uint64_t>(iter),
                           static_cast<std::uint64_t>(qids[i]));
    for (int k = 0; k < G; ++k)
      w.group.rollouts.push_back(sample_chain(
          state.theta_old, state.env, *w.question, cfg.rollout_temperature,
          rng));
    for (const auto& r : w.group.rollouts)
      append_step_samples(*w.question, r, w.policy_steps);
  });

  // Balanced expert batch: per question, reference rollouts are drawn until
  // their step count matches the policy step count.
  std::vector<std::vector<Rollout>> expert_storage(qids.size());
  parallel_for(qids.size(), cfg.threads, [&](std::size_t i) {
    auto& w = work[i];
    auto rng = Rng::stream(cfg.seed, "reference-sample",
                           static_cast<std::uint64_t>(iter),
                           static_cast<std::uint64_t>(qids[i]));
    std::size_t need = w.policy_steps.size();
    while (need > 0) {
      const auto refs = state.buffer.sample_reference(qids[i], 1, rng);
      expert_storage[i].push_back(*refs[0]);
      need -= std::min(need, refs[0]->steps.size());
    }
    for (const auto& r : expert_storage[i])
      append_step_samples(*w.question, r, w.expert_steps);
    w.expert_steps.resize(w.policy_steps.size());
  });

  std::vector<StepSample> expert_all, policy_all;
  for (const auto& w : work) {
    expert_all.insert(expert_all.end(), w.expert_steps.begin(),
                      w.expert_steps.end());
    policy_all.insert(policy_all.end(), w.policy_steps.begin(),
                      w.policy_steps.end());
  }

  // PRM step first, then the policy step (strict alternation).
  const auto [loss, prm_grad] = airl_loss_with_grad(
      state.prm, state.theta, state.env, expert_all, policy_all);
  prm_update(state.prm, prm_grad, state.prm_opt, cfg.prm_lr);

  parallel_for(work.size(), cfg.threads, [&](std::size_t i) {
    auto& w = work[i];
    w.objective = composite_objective_detailed(
        w.group, *w.question, state.env, state.theta, state.theta_old,
        state.theta_ref, state.prm, cfg.objective);
  });

  // Deterministic reduction in question order, then one ascent step.
  std::vector<Feature> grad_entries;
  double j_grpo_mean = 0.0, j_airl_mean = 0.0, kl_mean = 0.0;
  double accuracy = 0.0, length = 0.0;
  std::size_t n_rollouts = 0;
  for (const auto& w : work) {
    for (const auto& f : w.objective.grad)
      grad_entries.push_back(
          {f.index, f.value / static_cast<double>(work.size())});
    j_grpo_mean += w.objective.j_grpo_value / static_cast<double>(work.size());
    j_airl_mean += w.objective.j_airl_value / static_cast<double>(work.size());
    kl_mean += w.objective.mean_kl / static_cast<double>(work.size());
    for (const auto& r : w.group.rollouts) {
      accuracy += r.outcome_reward;
      length += static_cast<double>(r.steps.size());
      ++n_rollouts;
    }
  }
  accuracy /= static_cast<double>(n_rollouts);
  length /= static_cast<double>(n_rollouts);

  auto ascent = merge_sparse(std::move(grad_entries));
  for (auto& f : ascent) f.value = -f.value;  // adam descends
  AdamConfig pcfg;
  pcfg.lr = cfg.policy_lr;
  adam_step(state.theta.weights, ascent, state.policy_opt, pcfg);
  ++state.theta.version;

  state.theta_old = state.theta;

  for (const auto& w : work)
    for (const auto& r : w.group.rollouts)
      if (r.outcome_reward == 1) state.buffer.insert(r);

  state.iteration = iter;
  IterationMetrics m;
  m.iteration = iter;
  m.train_accuracy = accuracy;
  m.mean_rollout_length = length;
  m.airl_loss = loss;
  m.j_grpo = j_grpo_mean;
  m.j_airl = j_airl_mean;
  m.mean_kl = kl_mean;
  m.buffer_size = state.buffer.size();
  return m;
}

EvalMetrics evaluate(const TrainerState& state, int iteration,
                     std::span<const Question> questions) {
  EvalMetrics m;
  m.iteration = iteration;
  std::vector<double> correct(questions.size(), 0.0);
  std::vector<double> length(questions.size(), 0.0);
  parallel_for(questions.size(), state.config.threads, [&](std::size_t i) {
    Rng dummy(0);  // temperature 0 consumes no randomness
    const auto r = sample_chain(state.theta, state.env, questions[i], 0.0,
                                dummy);
    correct[i] = r.outcome_reward;
    length[i] = static_cast<double>(r.steps.size());
  });
  for (std::size_t i = 0; i < questions.size(); ++i) {
    m.accuracy += correct[i];
    m.mean_length += length[i];
  }
  m.accuracy /= static_cast<double>(questions.size());
  m.mean_length /= static_cast<double>(questions.size());
  return m;
}

RunResult run(TrainerState& state, int total_iterations,
              std::span<const Question> validation_set, int eval_every,
              const RunHooks& hooks) {
  if (total_iterations < 1)
    throw Error("bad-run", "total iterations must be >= 1");
  RunResult result;
  if (eval_every > 0 && !validation_set.empty()) {
    // Untrained baseline at iteration 0.
    const auto ev = evaluate(state, 0, validation_set);
    result.evals.push_back(ev);
    if (hooks.on_eval) hooks.on_eval(ev);
  }
  for (int e = 0; e < total_iterations; ++e) {
    const auto metrics = train_iteration(state);
    result.iterations.push_back(metrics);
    if (hooks.on_iteration) hooks.on_iteration(metrics);

    const bool eval_point =
        eval_every > 0 && state.iteration % eval_every == 0;
    if (eval_point && !validation_set.empty()) {
      const auto ev = evaluate(state, state.iteration, validation_set);
      result.evals.push_back(ev);
      if (hooks.on_eval) hooks.on_eval(ev);
      if (hooks.on_checkpoint)
        hooks.on_checkpoint(state, state.iteration, false);
    }
  }
  if (hooks.on_checkpoint) hooks.on_checkpoint(state, state.iteration, true);
  return result;
}

}  // namespace steprl
