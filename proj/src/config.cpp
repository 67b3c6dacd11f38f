#include "steprl/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "steprl/error.hpp"
#include "steprl/io.hpp"

namespace steprl {

std::vector<ConfigKeyDoc> config_keys() {
  return {
      {"seed", "42", "64-bit run seed; all randomness derives from it"},
      {"threads", "1", "worker threads (results are thread-count independent)"},
      {"env.kind", "arithmetic-chain", "arithmetic-chain | graph-path"},
      {"env.modulus", "10", "arithmetic modulus m >= 2"},
      {"env.operands", "5", "arithmetic operand count k >= 2"},
      {"env.ops", "add", "operator set: add | mul | add,mul"},
      {"env.graph_layers", "6", "graph layers L >= 2"},
      {"env.graph_branching", "3", "graph out-degree b >= 2"},
      {"env.max_steps", "0", "chain budget; 0 = minimal solution length"},
      {"train.iterations", "300", "total training iterations E"},
      {"train.batch_questions", "64", "questions sampled per iteration"},
      {"train.group_size", "8", "rollouts per question G"},
      {"train.lambda", "0.5", "composite weight: lambda*J_AIRL + (1-lambda)*J_GRPO"},
      {"train.kl_beta", "0.001", "KL coefficient in J_GRPO"},
      {"train.clip_epsilon", "0.2", "clipped-surrogate radius"},
      {"train.advantage_floor", "1e-08", "std floor in advantage normalization"},
      {"train.policy_lr", "0.02", "policy optimizer step size"},
      {"train.prm_lr", "0.05", "PRM optimizer step size"},
      {"train.rollout_temperature", "0.7", "sampling temperature for rollouts"},
      {"train.seed_attempts", "64", "buffer-seeding rollouts per question"},
      {"train.seed_reference", "1", "seed the buffer with each question's reference chain"},
      {"train.eval_every", "50", "validation cadence in iterations (0 = never)"},
      {"train.num_questions", "512", "training question count"},
      {"val.num_questions", "1000", "held-out question count"},
      {"policy.dim", "262144", "feature-hash dimension (power of two)"},
      {"buffer.capacity", "8192", "replay buffer capacity"},
      {"buffer.per_question_cap", "16", "max stored rollouts per question"},
      {"search.n", "64", "solutions per question N"},
      {"search.m", "4", "beam / tree width M"},
      {"search.alpha", "1.25", "UCT exploration coefficient"},
      {"search.temperature", "0.7", "search sampling temperature"},
      {"search.step_agg", "min", "step aggregation: min | last"},
      {"search.answer_agg", "sum", "answer aggregation: max | sum | majority"},
      {"out.dir", "runs/default", "output directory for checkpoints/metrics"},
  };
}

std::string config_help() {
  std::ostringstream os;
  os << "Configuration keys (key = value, '#' comments):\n";
  for (const auto& k : config_keys()) {
    os << "  " << k.name;
    for (std::size_t i = std::string(k.name).size(); i < 28; ++i) os << ' ';
    os << "default " << k.def;
    for (std::size_t i = std::string(k.def).size(); i < 18; ++i) os << ' ';
    os << k.doc << "\n";
  }
  return os.str();
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

class KeyMap {
 public:
  explicit KeyMap(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    std::map<std::string, bool> known;
    for (const auto& k : config_keys()) known[k.name] = true;
    while (std::getline(is, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw Error("config-parse",
                    "line " + std::to_string(lineno) + ": expected key = value");
      const auto key = trim(line.substr(0, eq));
      const auto value = trim(line.substr(eq + 1));
      if (!known.count(key))
        throw Error("config-parse", "line " + std::to_string(lineno) +
                                        ": unknown key '" + key + "'");
      values_[key] = value;
    }
  }

  std::string get(const std::string& key, const std::string& def) const {
    const auto it = values_.find(key);
    return it == values_.end() ? def : it->second;
  }

  template <typename T>
  T num(const std::string& key, const std::string& def) const {
    const auto s = get(key, def);
    std::istringstream is(s);
    T v{};
    if (!(is >> v))
      throw Error("config-parse", "key '" + key + "': bad number '" + s + "'");
    return v;
  }

 private:
  std::map<std::string, std::string> values_;
};

std::vector<ArithOp> parse_ops(const std::string& s) {
  std::vector<ArithOp> ops;
  std::istringstream is(s);
  std::string tok;
  while (std::getline(is, tok, ',')) {
    tok = trim(tok);
    if (tok == "add")
      ops.push_back(ArithOp::add);
    else if (tok == "mul")
      ops.push_back(ArithOp::mul);
    else
      throw Error("config-parse", "unknown operator '" + tok + "'");
  }
  if (ops.empty()) throw Error("config-parse", "env.ops must be nonempty");
  return ops;
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
  const KeyMap keys(text);
  RunConfig cfg;

  cfg.seed = keys.num<std::uint64_t>("seed", "42");
  cfg.threads = keys.num<int>("threads", "1");

  cfg.env.kind = env_kind_from_name(keys.get("env.kind", "arithmetic-chain"));
  cfg.env.modulus = keys.num<std::int64_t>("env.modulus", "10");
  cfg.env.operand_count = keys.num<int>("env.operands", "5");
  cfg.env.operator_set = parse_ops(keys.get("env.ops", "add"));
  cfg.env.layers = keys.num<int>("env.graph_layers", "6");
  cfg.env.branching = keys.num<int>("env.graph_branching", "3");
  cfg.env.max_steps = keys.num<int>("env.max_steps", "0");
  cfg.env.validate();

  cfg.trainer.seed = cfg.seed;
  cfg.trainer.threads = cfg.threads;
  cfg.trainer.iterations = keys.num<int>("train.iterations", "300");
  cfg.trainer.batch_questions = keys.num<int>("train.batch_questions", "64");
  cfg.trainer.objective.group_size = keys.num<int>("train.group_size", "8");
  cfg.trainer.objective.lambda = keys.num<double>("train.lambda", "0.5");
  cfg.trainer.objective.kl_beta = keys.num<double>("train.kl_beta", "0.001");
  cfg.trainer.objective.clip_epsilon =
      keys.num<double>("train.clip_epsilon", "0.2");
  cfg.trainer.objective.advantage_floor =
      keys.num<double>("train.advantage_floor", "1e-08");
  cfg.trainer.policy_lr = keys.num<double>("train.policy_lr", "0.02");
  cfg.trainer.prm_lr = keys.num<double>("train.prm_lr", "0.05");
  cfg.trainer.rollout_temperature =
      keys.num<double>("train.rollout_temperature", "0.7");
  cfg.trainer.seed_attempts = keys.num<int>("train.seed_attempts", "64");
  cfg.trainer.seed_reference = keys.num<int>("train.seed_reference", "1") != 0;
  cfg.trainer.eval_every = keys.num<int>("train.eval_every", "50");
  cfg.trainer.dim = keys.num<std::uint32_t>("policy.dim", "262144");
  cfg.trainer.buffer_capacity =
      keys.num<std::size_t>("buffer.capacity", "8192");
  cfg.trainer.per_question_cap =
      keys.num<std::size_t>("buffer.per_question_cap", "16");

  cfg.train_questions = keys.num<std::size_t>("train.num_questions", "512");
  cfg.val_questions = keys.num<std::size_t>("val.num_questions", "1000");

  cfg.search.n = keys.num<int>("search.n", "64");
  cfg.search.m = keys.num<int>("search.m", "4");
  cfg.search.uct_alpha = keys.num<double>("search.alpha", "1.25");
  cfg.search.temperature = keys.num<double>("search.temperature", "0.7");
  cfg.search.step_agg = step_agg_from_name(keys.get("search.step_agg", "min"));
  cfg.search.answer_agg =
      answer_agg_from_name(keys.get("search.answer_agg", "sum"));

  cfg.out_dir = keys.get("out.dir", "runs/default");

  if (cfg.trainer.objective.group_size < 2)
    throw Error("config-parse", "train.group_size must be >= 2");
  if (cfg.trainer.objective.lambda < 0.0 || cfg.trainer.objective.lambda > 1.0)
    throw Error("config-parse", "train.lambda must be in [0,1]");
  if (!is_power_of_two(cfg.trainer.dim))
    throw Error("config-parse", "policy.dim must be a power of two");
  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("config-missing", path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_config_text(ss.str());
}

}  // namespace steprl
