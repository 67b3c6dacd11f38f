// steprl: train a step-wise policy and PRM on synthetic reasoning
// environments, reuse the PRM for test-time search, and run the built-in
// numerical ground-truth checks.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "steprl/checks.hpp"
#include "steprl/config.hpp"
#include "steprl/error.hpp"
#include "steprl/io.hpp"
#include "steprl/oracle.hpp"
#include "steprl/parallel.hpp"
#include "steprl/records.hpp"
#include "steprl/search.hpp"
#include "steprl/trainer.hpp"

namespace fs = std::filesystem;
using namespace steprl;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitDiverged = 3;
constexpr int kExitDimMismatch = 4;
constexpr int kExitMalformed = 5;

std::vector<Question> load_question_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("config-missing", path);
  return load_questions(is);
}

void write_policy_file(const PolicyParams& p, const std::string& path) {
  std::ostringstream os;
  save_policy_checkpoint(p, os);
  write_text_file(path, os.str());
}

void write_prm_file(const PRMCheckpoint& c, const std::string& path) {
  std::ostringstream os;
  save_prm_checkpoint(c, os);
  write_text_file(path, os.str());
}

int cmd_train(const std::string& config_path) {
  RunConfig cfg;
  try {
    cfg = parse_config_file(config_path);
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  fs::create_directories(cfg.out_dir);
  const auto train_qs = generate_question_set(cfg.env, cfg.train_questions,
                                              cfg.seed, "train-questions");
  const auto val_qs = generate_question_set(
      cfg.env, cfg.val_questions, cfg.seed, "val-questions",
      static_cast<QuestionId>(1000000));
  {
    std::ostringstream os;
    save_questions(train_qs, os);
    write_text_file(cfg.out_dir + "/questions_train.jsonl", os.str());
  }
  {
    std::ostringstream os;
    save_questions(val_qs, os);
    write_text_file(cfg.out_dir + "/questions_val.jsonl", os.str());
  }

  try {
    auto state = init_run(cfg.trainer, cfg.env, train_qs);

    std::ostringstream metrics;
    RunHooks hooks;
    hooks.on_iteration = [&](const IterationMetrics& m) {
      metrics << train_metrics_line(m) << '\n';
      if (m.iteration % 10 == 0 || m.iteration == 1)
        std::cout << "iter " << m.iteration << " acc "
                  << m.train_accuracy << " airl_loss " << m.airl_loss
                  << " buffer " << m.buffer_size << "\n";
    };
    hooks.on_eval = [&](const EvalMetrics& m) {
      metrics << eval_metrics_line(m) << '\n';
      std::cout << "eval @" << m.iteration << " accuracy " << m.accuracy
                << " mean_length " << m.mean_length << "\n";
    };
    hooks.on_checkpoint = [&](const TrainerState& st, int iteration,
                              bool final) {
      const std::string tag =
          final ? "final" : "iter_" + std::to_string(iteration);
      write_policy_file(st.theta, cfg.out_dir + "/policy_" + tag + ".ckpt");
      PRMCheckpoint pc;
      pc.prm = st.prm;
      pc.frozen_policy = st.theta;
      pc.metadata = {{"seed", std::to_string(cfg.seed)},
                     {"iterations", std::to_string(iteration)},
                     {"env", st.env.kind == EnvKind::arithmetic_chain
                                 ? "arithmetic-chain"
                                 : "graph-path"}};
      write_prm_file(pc, cfg.out_dir + "/prm_" + tag + ".ckpt");
    };

    run(state, cfg.trainer.iterations, val_qs, cfg.trainer.eval_every, hooks);

    {
      std::ostringstream os;
      save_buffer(state.buffer, os);
      write_text_file(cfg.out_dir + "/buffer.jsonl", os.str());
    }
    write_text_file(cfg.out_dir + "/metrics.jsonl", metrics.str());
  } catch (const Error& e) {
    if (e.slug() == "diverged") {
      std::cerr << "training diverged: " << e.what() << "\n";
      return kExitDiverged;
    }
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return 0;
}

int cmd_search(const std::string& policy_path, const std::string& prm_path,
               std::string method, const std::string& config_path,
               const std::string& questions_path, const std::string& out_path) {
  RunConfig cfg;
  PolicyParams policy;
  std::vector<Question> questions;
  try {
    cfg = parse_config_file(config_path);
    std::istringstream ps(read_text_file(policy_path));
    policy = load_policy_checkpoint(ps);
    questions = load_question_file(questions_path);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  // Fig. 6-style aliases: the weighted-vote names map onto the sum scores.
  if (method == "min-vote") {
    std::cerr << "warning: method 'min-vote' is an alias of bon with "
                 "step_agg=min, answer_agg=sum\n";
    method = "bon";
    cfg.search.step_agg = StepAgg::min;
    cfg.search.answer_agg = AnswerAgg::sum;
  } else if (method == "last-vote") {
    std::cerr << "warning: method 'last-vote' is an alias of bon with "
                 "step_agg=last, answer_agg=sum\n";
    method = "bon";
    cfg.search.step_agg = StepAgg::last;
    cfg.search.answer_agg = AnswerAgg::sum;
  }

  const bool needs_prm = method != "self-consistency";
  PRMCheckpoint prm_ckpt;
  if (needs_prm) {
    try {
      std::istringstream is(read_text_file(prm_path));
      prm_ckpt = load_prm_checkpoint(is);
    } catch (const Error& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kExitConfig;
    }
    if (prm_ckpt.prm.dim != policy.dim) {
      std::cerr << "error: checkpoint dimension mismatch (policy d="
                << policy.dim << ", prm d=" << prm_ckpt.prm.dim << ")\n";
      return kExitDimMismatch;
    }
  } else if (!prm_path.empty()) {
    std::cerr << "warning: self-consistency ignores the PRM checkpoint\n";
  }

  using SearchFn = SearchOutcome (*)(const PolicyParams&, const StepScorer&,
                                     const EnvSpec&, const Question&,
                                     const SearchConfig&, Rng&);
  SearchFn fn = nullptr;
  if (method == "bon") fn = best_of_n;
  else if (method == "beam") fn = beam_search;
  else if (method == "mcts") fn = mcts;
  else if (method != "self-consistency") {
    std::cerr << "error: unknown method '" << method << "'\n";
    return kExitConfig;
  }

  const auto scorer = needs_prm
                          ? make_prm_scorer(prm_ckpt.prm,
                                            prm_ckpt.frozen_policy, cfg.env)
                          : StepScorer{};

  std::vector<SearchRecord> records(questions.size());
  try {
    std::vector<std::string> errors(questions.size());
    parallel_for(questions.size(), cfg.threads, [&](std::size_t i) {
      const auto& q = questions[i];
      auto& rec = records[i];
      rec.question_id = q.id;
      rec.method = method;
      rec.n = cfg.search.n;
      rec.m = cfg.search.m;
      if (method == "self-consistency") {
        auto rng = Rng::stream(cfg.seed, "search-rollouts",
                               static_cast<std::uint64_t>(q.id));
        rec.chosen_answer = self_consistency(policy, cfg.env, q, cfg.search.n,
                                             cfg.search.temperature, rng);
        rec.rollout_count = static_cast<std::size_t>(cfg.search.n);
      } else {
        const char* stream_name =
            method == "bon" ? "search-rollouts" : method.c_str();
        auto rng = Rng::stream(cfg.seed, stream_name,
                               static_cast<std::uint64_t>(q.id));
        const auto out = fn(policy, scorer, cfg.env, q, cfg.search, rng);
        rec.chosen_answer = out.answer;
        rec.rollout_count = out.rollout_count;
        for (const auto& s : out.solutions)
          rec.solution_scores.push_back(s.step_score);
      }
      rec.correct = rec.chosen_answer == q.ground_truth ? 1 : 0;
    });

    std::ostringstream os;
    double accuracy = 0.0;
    for (const auto& rec : records) {
      os << search_record_line(rec) << '\n';
      accuracy += rec.correct;
    }
    accuracy /= static_cast<double>(records.size());
    os << search_summary_line(method, cfg.search.n, records.size(), accuracy)
       << '\n';
    write_text_file(out_path, os.str());
    std::cout << "method " << method << " n " << cfg.search.n << " accuracy "
              << accuracy << " over " << records.size() << " questions\n";
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.slug() == "beam-shape" ? kExitConfig : kExitDiverged;
  }
  return 0;
}

int cmd_eval(const std::string& policy_path, const std::string& questions_path,
             int threads) {
  PolicyParams policy;
  std::vector<Question> questions;
  EnvSpec spec;
  try {
    std::istringstream ps(read_text_file(policy_path));
    policy = load_policy_checkpoint(ps);
    questions = load_question_file(questions_path);
    if (questions.empty()) {
      std::cerr << "error: empty question set\n";
      return kExitConfig;
    }
    spec.kind = env_kind_from_name(questions.front().env_id);
    if (spec.kind == EnvKind::arithmetic_chain) {
      // Recover (m, k) from the payload shape: tokens = 2k-1, op tokens
      // carry m + op.
      spec.operand_count =
          static_cast<int>((questions.front().payload.size() + 1) / 2);
      std::int64_t m = 2;
      for (const auto& q : questions)
        for (std::size_t j = 0; j < q.payload.size(); j += 2)
          m = std::max(m, q.payload[j] + 1);
      spec.modulus = m;
      spec.operator_set = {ArithOp::add, ArithOp::mul};
    } else {
      spec.layers = static_cast<int>(questions.front().payload[0]);
      spec.branching = static_cast<int>(questions.front().payload[1]);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  std::vector<int> correct(questions.size(), 0);
  std::vector<double> lengths(questions.size(), 0.0);
  parallel_for(questions.size(), threads, [&](std::size_t i) {
    Rng dummy(0);
    const auto r = sample_chain(policy, spec, questions[i], 0.0, dummy);
    correct[i] = r.outcome_reward;
    lengths[i] = static_cast<double>(r.steps.size());
  });
  double acc = 0.0, len = 0.0;
  for (std::size_t i = 0; i < questions.size(); ++i) {
    acc += correct[i];
    len += lengths[i];
  }
  acc /= static_cast<double>(questions.size());
  len /= static_cast<double>(questions.size());
  std::cout << "accuracy " << acc << " mean_length " << len << " questions "
            << questions.size() << "\n";
  return 0;
}

int cmd_oracle_check(const std::string& out_path) {
  const auto results = run_oracle_checks();
  std::ostringstream os;
  bool all = true;
  for (const auto& r : results) {
    os << check_result_line(r) << '\n';
    std::cout << (r.pass ? "PASS " : "FAIL ") << r.name << " (measured "
              << r.measured << ", tolerance " << r.tolerance << ")\n";
    all = all && r.pass;
  }
  if (!out_path.empty()) write_text_file(out_path, os.str());
  return all ? 0 : 1;
}

int cmd_export(const std::string& metrics_path, const std::string& kind,
               const std::string& out_path) {
  std::string text;
  try {
    text = read_text_file(metrics_path);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  std::string csv;
  try {
    csv = export_csv(text, kind);
  } catch (const Error& e) {
    if (e.slug() == "export-malformed") {
      std::cerr << "malformed record: " << e.what() << "\n";
      return kExitMalformed;
    }
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  if (out_path.empty())
    std::cout << csv;
  else
    write_text_file(out_path, csv);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"step-wise policy + PRM training and PRM-guided search"};
  app.require_subcommand(1);

  std::string config_path, policy_path, prm_path, questions_path;
  std::string method = "bon", out_path, kind = "accuracy", metrics_path;
  int threads = 1;

  auto* train = app.add_subcommand("train", "run the training loop");
  train->add_option("--config", config_path, "config file (key = value)")
      ->required();
  train->footer(config_help());

  auto* search = app.add_subcommand(
      "search", "PRM-guided search over a question set");
  search->add_option("--policy", policy_path, "policy checkpoint")->required();
  search->add_option("--prm", prm_path, "PRM checkpoint");
  search->add_option("--method", method,
                     "bon | beam | mcts | self-consistency | min-vote | "
                     "last-vote");
  search->add_option("--config", config_path, "config file")->required();
  search->add_option("--questions", questions_path, "question set (jsonl)")
      ->required();
  search->add_option("--out", out_path, "result records file")->required();
  search->footer(config_help());

  auto* eval = app.add_subcommand(
      "eval", "temperature-0 Accuracy@1 over a question set");
  eval->add_option("--policy", policy_path, "policy checkpoint")->required();
  eval->add_option("--questions", questions_path, "question set (jsonl)")
      ->required();
  eval->add_option("--threads", threads, "worker threads");

  auto* oracle = app.add_subcommand(
      "oracle-check", "run the numerical ground-truth checks");
  oracle->add_option("--out", out_path, "report file (jsonl)");

  auto* exp = app.add_subcommand("export", "emit tidy CSV tables");
  exp->add_option("--metrics", metrics_path, "metrics / results file (jsonl)")
      ->required();
  exp->add_option("--kind", kind,
                  "accuracy (series,iteration,value) | length "
                  "(series,iteration,value) | search-accuracy "
                  "(method,n,accuracy)");
  exp->add_option("--out", out_path, "CSV output path (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) return cmd_train(config_path);
    if (*search)
      return cmd_search(policy_path, prm_path, method, config_path,
                        questions_path, out_path);
    if (*eval) return cmd_eval(policy_path, questions_path, threads);
    if (*oracle) return cmd_oracle_check(out_path);
    if (*exp) return cmd_export(metrics_path, kind, out_path);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
