#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "steprl/config.hpp"
#include "steprl/error.hpp"
#include "steprl/io.hpp"
#include "steprl/records.hpp"
#include "steprl/rng.hpp"

using namespace steprl;

TEST_CASE("17-digit formatting round-trips doubles exactly") {
  auto rng = Rng::stream(1, "g17");
  for (int i = 0; i < 5000; ++i) {
    const double x = std::ldexp(2.0 * rng.next_double() - 1.0,
                                static_cast<int>(rng.next_below(80)) - 40);
    const double back = std::strtod(fmt_g17(x).c_str(), nullptr);
    REQUIRE(back == x);
  }
  CHECK(fmt_g17(0.0) == "0");
  CHECK(fmt_g17(-1.0) == "-1");
}

TEST_CASE("rollout lines round-trip") {
  Rollout r;
  r.question_id = 17;
  r.steps = {{3, false, 0}, {1, false, 0}, {9, true, 9}};
  r.step_logprobs = {-0.105360515657826301, -2.302585092994045684, -1.5};
  r.outcome_reward = 1;
  const auto line = rollout_to_line(r);
  const auto back = rollout_from_line(line);
  CHECK(back.question_id == r.question_id);
  CHECK(back.steps == r.steps);
  CHECK(back.step_logprobs == r.step_logprobs);
  CHECK(back.outcome_reward == 1);
  CHECK(rollout_to_line(back) == line);
}

TEST_CASE("question lines round-trip") {
  Question q;
  q.id = 5;
  q.env_id = "arithmetic-chain";
  q.payload = {3, 10, 4, 11, 9};
  q.ground_truth = 3;
  const auto back = question_from_line(question_to_line(q));
  CHECK(back.id == q.id);
  CHECK(back.env_id == q.env_id);
  CHECK(back.payload == q.payload);
  CHECK(back.ground_truth == q.ground_truth);
}

TEST_CASE("policy checkpoints reload bit-for-bit") {
  auto p = make_policy(1u << 10);
  p.version = 12;
  auto rng = Rng::stream(2, "ckpt");
  for (auto& w : p.weights)
    if (rng.next_below(8) == 0) w = 2.0 * rng.next_double() - 1.0;

  std::ostringstream os;
  save_policy_checkpoint(p, os);
  std::istringstream is(os.str());
  const auto back = load_policy_checkpoint(is);
  CHECK(back.dim == p.dim);
  CHECK(back.version == p.version);
  CHECK(back.weights == p.weights);

  std::ostringstream os2;
  save_policy_checkpoint(back, os2);
  CHECK(os2.str() == os.str());
}

TEST_CASE("prm checkpoints carry the frozen policy and metadata") {
  PRMCheckpoint c;
  c.prm = make_prm(1u << 10);
  c.prm.version = 3;
  c.frozen_policy = make_policy(1u << 10);
  c.frozen_policy.version = 9;
  auto rng = Rng::stream(3, "prmckpt");
  for (auto& w : c.prm.weights) w = rng.next_double();
  for (auto& w : c.frozen_policy.weights) w = -rng.next_double();
  c.metadata = {{"seed", "42"}, {"iterations", "300"}};

  std::ostringstream os;
  save_prm_checkpoint(c, os);
  std::istringstream is(os.str());
  const auto back = load_prm_checkpoint(is);
  CHECK(back.prm.weights == c.prm.weights);
  CHECK(back.frozen_policy.weights == c.frozen_policy.weights);
  CHECK(back.frozen_policy.version == 9);
  CHECK(back.metadata.at("seed") == "42");
}

TEST_CASE("config: defaults, overrides, unknown keys, bad values") {
  const auto def = parse_config_text("");
  CHECK(def.seed == 42);
  CHECK(def.trainer.objective.lambda == 0.5);
  CHECK(def.trainer.objective.kl_beta == 0.001);
  CHECK(def.trainer.objective.group_size == 8);
  CHECK(def.trainer.objective.clip_epsilon == 0.2);
  CHECK(def.search.m == 4);
  CHECK(def.search.uct_alpha == 1.25);
  CHECK(def.search.temperature == 0.7);

  const auto cfg = parse_config_text(
      "# comment\nseed = 9\ntrain.lambda = 0.25  # inline\nenv.ops = add,mul\n");
  CHECK(cfg.seed == 9);
  CHECK(cfg.trainer.objective.lambda == 0.25);
  CHECK(cfg.env.operator_set.size() == 2);

  CHECK_THROWS_WITH_AS(parse_config_text("nope = 1\n"),
                       doctest::Contains("unknown key"), Error);
  CHECK_THROWS_WITH_AS(parse_config_text("train.lambda = 1.5\n"),
                       doctest::Contains("lambda"), Error);
  CHECK_THROWS_WITH_AS(parse_config_text("policy.dim = 1000\n"),
                       doctest::Contains("power of two"), Error);
  CHECK_THROWS_AS(parse_config_file("/nonexistent/x.cfg"), Error);
}

TEST_CASE("config help documents every key with its default") {
  const auto help = config_help();
  for (const auto& k : config_keys()) {
    CHECK(help.find(k.name) != std::string::npos);
    CHECK(help.find(k.def) != std::string::npos);
  }
}

TEST_CASE("metric lines carry fixed keys; export emits tidy rows") {
  IterationMetrics m;
  m.iteration = 3;
  m.train_accuracy = 0.5;
  m.mean_rollout_length = 4;
  m.airl_loss = 1.25;
  m.j_grpo = 0.125;
  m.j_airl = -0.5;
  m.mean_kl = 0.001953125;
  m.buffer_size = 77;
  EvalMetrics ev;
  ev.iteration = 3;
  ev.accuracy = 0.25;
  ev.mean_length = 4;

  const std::string text =
      train_metrics_line(m) + "\n" + eval_metrics_line(ev) + "\n";
  const auto acc = export_csv(text, "accuracy");
  CHECK(acc == "series,iteration,value\n"
               "train_accuracy,3,0.5\n"
               "val_accuracy,3,0.25\n");
  const auto len = export_csv(text, "length");
  CHECK(len == "series,iteration,value\n"
               "train_mean_length,3,4\n"
               "val_mean_length,3,4\n");

  // three iterations -> three rows per series
  std::string three;
  for (int i = 1; i <= 3; ++i) {
    m.iteration = i;
    three += train_metrics_line(m) + "\n";
  }
  const auto csv = export_csv(three, "accuracy");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);  // header + 3 rows

  // idempotent: re-running the export gives byte-identical output
  CHECK(export_csv(three, "accuracy") == csv);

  CHECK_THROWS_WITH_AS(export_csv("{not json\n", "accuracy"),
                       doctest::Contains("line 1"), Error);
  CHECK_THROWS_AS(export_csv("", "bogus-kind"), Error);
}

TEST_CASE("search records and summary lines") {
  SearchRecord r;
  r.question_id = 4;
  r.method = "bon";
  r.n = 8;
  r.m = 4;
  r.chosen_answer = 7;
  r.correct = 1;
  r.solution_scores = {0.5, -1.0};
  r.rollout_count = 8;
  const auto line = search_record_line(r);
  CHECK(line.find("\"method\":\"bon\"") != std::string::npos);
  CHECK(line.find("\"rollout_count\":8") != std::string::npos);

  const std::string summary = search_summary_line("bon", 8, 100, 0.625);
  const auto csv = export_csv(summary + "\n", "search-accuracy");
  CHECK(csv == "method,n,accuracy\nbon,8,0.625\n");
}
