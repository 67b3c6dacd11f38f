#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "steprl/env.hpp"
#include "steprl/error.hpp"
#include "steprl/oracle.hpp"
#include "steprl/search.hpp"

using namespace steprl;

namespace {

EnvSpec default_spec() {
  EnvSpec s;
  s.kind = EnvKind::arithmetic_chain;
  s.modulus = 10;
  s.operand_count = 5;
  s.operator_set = {ArithOp::add};
  return s;
}

EnvSpec tiny_spec() {
  EnvSpec s;
  s.kind = EnvKind::arithmetic_chain;
  s.modulus = 5;
  s.operand_count = 3;
  s.operator_set = {ArithOp::add};
  return s;
}

std::vector<CandidateSolution> fixture_solutions() {
  std::vector<CandidateSolution> sols(3);
  sols[0].answer = 7;
  sols[0].step_score = 1.0;
  sols[1].answer = 7;
  sols[1].step_score = 1.0;
  sols[2].answer = 3;
  sols[2].step_score = 5.0;
  return sols;
}

}  // namespace

TEST_CASE("step_aggregate: min, last, singleton, empty") {
  const std::vector<double> rewards = {0.2, -1.0, 0.5};
  CHECK(step_aggregate(rewards, StepAgg::min) == -1.0);
  CHECK(step_aggregate(rewards, StepAgg::last) == 0.5);
  const std::vector<double> one = {0.4};
  CHECK(step_aggregate(one, StepAgg::min) == 0.4);
  CHECK(step_aggregate(one, StepAgg::last) == 0.4);
  CHECK_THROWS_AS(step_aggregate({}, StepAgg::min), Error);
}

TEST_CASE("answer_aggregate on the worked fixture") {
  const auto sols = fixture_solutions();
  CHECK(answer_aggregate(sols, AnswerAgg::sum) == 3);
  CHECK(answer_aggregate(sols, AnswerAgg::max) == 3);
  CHECK(answer_aggregate(sols, AnswerAgg::majority) == 7);
  CHECK_THROWS_AS(answer_aggregate({}, AnswerAgg::sum), Error);
}

TEST_CASE("ties break toward the smallest answer token") {
  std::vector<CandidateSolution> sols(2);
  sols[0].answer = 9;
  sols[0].step_score = 1.0;
  sols[1].answer = 2;
  sols[1].step_score = 1.0;
  CHECK(answer_aggregate(sols, AnswerAgg::sum) == 2);
  CHECK(answer_aggregate(sols, AnswerAgg::max) == 2);
  CHECK(answer_aggregate(sols, AnswerAgg::majority) == 2);
}

TEST_CASE("uct_score values") {
  CHECK(uct_score(0.5, 10, 5, 1.25) == doctest::Approx(1.3483).epsilon(1e-3));
  CHECK(std::isinf(uct_score(-3.0, 10, 0, 1.25)));
  CHECK(uct_score(0.42, 99, 7, 0.0) == 0.42);
}

TEST_CASE("best_of_n: n=1 returns the sampled chain's answer") {
  const auto spec = default_spec();
  auto qrng = Rng::stream(80, "bon1");
  const auto q = generate_question(spec, 0, qrng);
  const auto policy = make_policy(1u << 14);
  const auto scorer = make_oracle_scorer(spec);
  SearchConfig cfg;
  cfg.n = 1;

  auto r1 = Rng::stream(80, "roll", 1);
  auto r2 = Rng::stream(80, "roll", 1);
  const auto out = best_of_n(policy, scorer, spec, q, cfg, r1);
  const auto chain = sample_chain(policy, spec, q, cfg.temperature, r2);
  CHECK(out.answer == chain.final_answer());
  CHECK(out.rollout_count == 1);
}

TEST_CASE("best_of_n is deterministic given the stream") {
  const auto spec = default_spec();
  auto qrng = Rng::stream(81, "det");
  const auto q = generate_question(spec, 3, qrng);
  const auto policy = make_policy(1u << 14);
  const auto scorer = make_oracle_scorer(spec);
  SearchConfig cfg;
  cfg.n = 8;
  auto r1 = Rng::stream(81, "s", 0);
  auto r2 = Rng::stream(81, "s", 0);
  const auto a = best_of_n(policy, scorer, spec, q, cfg, r1);
  const auto b = best_of_n(policy, scorer, spec, q, cfg, r2);
  CHECK(a.answer == b.answer);
  REQUIRE(a.solutions.size() == b.solutions.size());
  for (std::size_t i = 0; i < a.solutions.size(); ++i)
    CHECK(a.solutions[i].chain == b.solutions[i].chain);
}

TEST_CASE("best_of_n matches brute-force selection over the same samples") {
  const auto spec = tiny_spec();
  const auto policy = make_policy(1u << 14);
  const auto scorer = make_oracle_scorer(spec);
  for (int t = 0; t < 20; ++t) {
    auto qrng = Rng::stream(82, "q", static_cast<std::uint64_t>(t));
    const auto q = generate_question(spec, t, qrng);
    SearchConfig cfg;
    cfg.n = 6;
    auto r1 = Rng::stream(82, "roll", static_cast<std::uint64_t>(t));
    auto r2 = Rng::stream(82, "roll", static_cast<std::uint64_t>(t));
    const auto out = best_of_n(policy, scorer, spec, q, cfg, r1);

    // independent replay: same chains, direct formula aggregation
    const auto chains = sample_n_chains(policy, spec, q, 6, 0.7, r2);
    std::vector<Answer> answers;
    std::vector<double> scores;
    for (const auto& c : chains) {
      answers.push_back(c.final_answer());
      double worst = 1e300;
      for (std::size_t i = 0; i < c.steps.size(); ++i)
        worst = std::min(worst,
                         scorer(q, std::span<const Step>(c.steps).first(i),
                                c.steps[i]));
      scores.push_back(worst);
    }
    CHECK(out.answer ==
          aggregate_answers_direct(answers, scores, AnswerAgg::sum));
  }
}

TEST_CASE("self_consistency equals best_of_n with majority aggregation") {
  const auto spec = default_spec();
  const auto policy = make_policy(1u << 14);
  const auto scorer = make_oracle_scorer(spec);
  for (int t = 0; t < 10; ++t) {
    auto qrng = Rng::stream(83, "q", static_cast<std::uint64_t>(t));
    const auto q = generate_question(spec, t, qrng);
    SearchConfig cfg;
    cfg.n = 9;
    cfg.answer_agg = AnswerAgg::majority;
    auto r1 = Rng::stream(83, "roll", static_cast<std::uint64_t>(t));
    auto r2 = Rng::stream(83, "roll", static_cast<std::uint64_t>(t));
    const auto bon = best_of_n(policy, scorer, spec, q, cfg, r1);
    const auto sc = self_consistency(policy, spec, q, 9, 0.7, r2);
    CHECK(bon.answer == sc);
  }
}

TEST_CASE("beam_search: shape checks and n==m greedy beam") {
  const auto spec = default_spec();
  auto qrng = Rng::stream(84, "beam");
  const auto q = generate_question(spec, 0, qrng);
  const auto policy = make_policy(1u << 14);
  const auto scorer = make_oracle_scorer(spec);

  SearchConfig bad;
  bad.n = 10;
  bad.m = 4;
  auto rng = Rng::stream(84, "r");
  CHECK_THROWS_WITH_AS(beam_search(policy, scorer, spec, q, bad, rng),
                       doctest::Contains("beam-shape"), Error);

  SearchConfig greedy;
  greedy.n = 4;
  greedy.m = 4;
  auto r2 = Rng::stream(84, "r2");
  const auto out = beam_search(policy, scorer, spec, q, greedy, r2);
  CHECK(out.solutions.size() == 4);
  CHECK(out.rollout_count == 4);
}

TEST_CASE("beam_search collects exactly n finished chains") {
  const auto spec = default_spec();
  const auto policy = make_policy(1u << 14);
  const auto scorer = make_oracle_scorer(spec);
  for (int t = 0; t < 5; ++t) {
    auto qrng = Rng::stream(85, "q", static_cast<std::uint64_t>(t));
    const auto q = generate_question(spec, t, qrng);
    SearchConfig cfg;
    cfg.n = 16;
    cfg.m = 4;
    auto rng = Rng::stream(85, "r", static_cast<std::uint64_t>(t));
    const auto out = beam_search(policy, scorer, spec, q, cfg, rng);
    CHECK(out.solutions.size() == 16);
    CHECK(out.rollout_count == 16);
    for (const auto& s : out.solutions) CHECK(s.chain.back().is_terminal);
  }
}

TEST_CASE("beam_search with a perfect scorer at least matches best_of_n") {
  const auto spec = default_spec();
  const auto policy = make_policy(1u << 14);
  const auto scorer = make_oracle_scorer(spec);
  int beam_hits = 0, bon_hits = 0;
  const int questions = 200;
  for (int t = 0; t < questions; ++t) {
    auto qrng = Rng::stream(86, "q", static_cast<std::uint64_t>(t));
    const auto q = generate_question(spec, t, qrng);
    SearchConfig cfg;
    cfg.n = 16;
    cfg.m = 4;
    auto r1 = Rng::stream(86, "beam", static_cast<std::uint64_t>(t));
    auto r2 = Rng::stream(86, "bon", static_cast<std::uint64_t>(t));
    beam_hits += beam_search(policy, scorer, spec, q, cfg, r1).answer ==
                         q.ground_truth
                     ? 1
                     : 0;
    bon_hits +=
        best_of_n(policy, scorer, spec, q, cfg, r2).answer == q.ground_truth
            ? 1
            : 0;
  }
  // guided pruning should not lose to unguided sampling at equal budget
  CHECK(beam_hits >= bon_hits);
}

TEST_CASE("mcts: smallest graph resolves after one simulation budget") {
  EnvSpec spec;
  spec.kind = EnvKind::graph_path;
  spec.layers = 2;
  spec.branching = 2;
  auto qrng = Rng::stream(87, "g");
  const auto q = generate_question(spec, 0, qrng);
  const auto policy = make_policy(1u << 14);
  const auto scorer = make_oracle_scorer(spec);
  SearchConfig cfg;
  cfg.n = 1;
  cfg.m = 2;
  auto rng = Rng::stream(87, "r");
  const auto out = mcts(policy, scorer, spec, q, cfg, rng);
  CHECK(out.solutions.size() == 1);
  CHECK(out.rollout_count == 1);
  CHECK(out.solutions[0].chain.size() == 1);
}

TEST_CASE("mcts with an exhaustive budget finds the truth on a tiny spec") {
  const auto spec = tiny_spec();  // 25 distinct chains
  const auto policy = make_policy(1u << 14);
  const auto scorer = make_oracle_scorer(spec);
  for (int t = 0; t < 25; ++t) {
    auto qrng = Rng::stream(88, "q", static_cast<std::uint64_t>(t));
    const auto q = generate_question(spec, t, qrng);
    SearchConfig cfg;
    cfg.n = 25;
    cfg.m = 5;
    auto rng = Rng::stream(88, "r", static_cast<std::uint64_t>(t));
    const auto out = mcts(policy, scorer, spec, q, cfg, rng);
    CHECK(out.solutions.size() == 25);
    CHECK(out.answer == q.ground_truth);
  }
}

TEST_CASE("mcts is deterministic given the stream") {
  const auto spec = default_spec();
  auto qrng = Rng::stream(89, "q");
  const auto q = generate_question(spec, 0, qrng);
  const auto policy = make_policy(1u << 14);
  const auto scorer = make_oracle_scorer(spec);
  SearchConfig cfg;
  cfg.n = 32;
  cfg.m = 4;
  auto r1 = Rng::stream(89, "r");
  auto r2 = Rng::stream(89, "r");
  const auto a = mcts(policy, scorer, spec, q, cfg, r1);
  const auto b = mcts(policy, scorer, spec, q, cfg, r2);
  CHECK(a.answer == b.answer);
  REQUIRE(a.solutions.size() == b.solutions.size());
  for (std::size_t i = 0; i < a.solutions.size(); ++i)
    CHECK(a.solutions[i].chain == b.solutions[i].chain);
  CHECK(a.rollout_count == 32);
}

TEST_CASE("search scorers: prm scorer uses the frozen snapshot") {
  const auto spec = tiny_spec();
  auto rng = Rng::stream(90, "frozen");
  const auto q = generate_question(spec, 0, rng);
  auto prm = make_prm(1u << 14);
  auto frozen = make_policy(1u << 14);
  for (auto& w : prm.weights) w = 0.2 * (2 * rng.next_double() - 1);
  for (auto& w : frozen.weights) w = 0.2 * (2 * rng.next_double() - 1);

  const auto scorer = make_prm_scorer(prm, frozen, spec);
  const auto cands = legal_actions(spec, q, {});
  const double direct =
      step_reward(prm, frozen, spec, q, {}, cands[1].step);
  CHECK(scorer(q, {}, cands[1].step) == direct);
}
