#include "steprl/io.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "steprl/error.hpp"

namespace steprl {

std::string fmt_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_double_row(std::ostream& os, std::span<const double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) os << ' ';
    os << fmt_g17(values[i]);
  }
  os << '\n';
}

void read_double_row(std::istream& is, std::span<double> out) {
  for (auto& v : out) {
    if (!(is >> v)) throw Error("bad-checkpoint", "truncated numeric row");
  }
}

std::string rollout_to_line(const Rollout& r) {
  std::ostringstream os;
  os << "{\"question_id\":" << r.question_id << ",\"steps\":[";
  for (std::size_t i = 0; i < r.steps.size(); ++i) {
    const auto& s = r.steps[i];
    if (i) os << ',';
    os << "{\"action_id\":" << s.action_id << ",\"is_terminal\":"
       << (s.is_terminal ? "true" : "false");
    if (s.is_terminal) os << ",\"declared_answer\":" << s.declared_answer;
    os << '}';
  }
  os << "],\"step_logprobs\":[";
  for (std::size_t i = 0; i < r.step_logprobs.size(); ++i) {
    if (i) os << ',';
    os << fmt_g17(r.step_logprobs[i]);
  }
  os << "],\"outcome_reward\":" << r.outcome_reward << '}';
  return os.str();
}

Rollout rollout_from_line(const std::string& line) {
  const auto j = nlohmann::json::parse(line);
  Rollout r;
  r.question_id = j.at("question_id").get<QuestionId>();
  for (const auto& js : j.at("steps")) {
    Step s;
    s.action_id = js.at("action_id").get<std::int64_t>();
    s.is_terminal = js.at("is_terminal").get<bool>();
    if (js.contains("declared_answer"))
      s.declared_answer = js.at("declared_answer").get<Answer>();
    r.steps.push_back(s);
  }
  r.step_logprobs = j.at("step_logprobs").get<std::vector<double>>();
  r.outcome_reward = j.at("outcome_reward").get<int>();
  return r;
}

void save_buffer(const ReplayBuffer& buffer, std::ostream& os) {
  for (const auto& r : buffer.entries()) os << rollout_to_line(r) << '\n';
}

ReplayBuffer load_buffer(std::istream& is, std::size_t capacity,
                         std::size_t per_question_cap) {
  ReplayBuffer buffer(capacity, per_question_cap);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    buffer.insert(rollout_from_line(line));
  }
  return buffer;
}

std::string question_to_line(const Question& q) {
  std::ostringstream os;
  os << "{\"id\":" << q.id << ",\"env_id\":\"" << q.env_id
     << "\",\"payload\":[";
  for (std::size_t i = 0; i < q.payload.size(); ++i) {
    if (i) os << ',';
    os << q.payload[i];
  }
  os << "],\"ground_truth\":" << q.ground_truth << '}';
  return os.str();
}

Question question_from_line(const std::string& line) {
  const auto j = nlohmann::json::parse(line);
  Question q;
  q.id = j.at("id").get<QuestionId>();
  q.env_id = j.at("env_id").get<std::string>();
  q.payload = j.at("payload").get<std::vector<std::int64_t>>();
  q.ground_truth = j.at("ground_truth").get<Answer>();
  return q;
}

void save_questions(std::span<const Question> qs, std::ostream& os) {
  for (const auto& q : qs) os << question_to_line(q) << '\n';
}

std::vector<Question> load_questions(std::istream& is) {
  std::vector<Question> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    out.push_back(question_from_line(line));
  }
  return out;
}

void save_policy_checkpoint(const PolicyParams& params, std::ostream& os) {
  os << "{\"format\":\"policy-checkpoint\",\"fmt_version\":1,\"d\":"
     << params.dim << ",\"version\":" << params.version << "}\n";
  write_double_row(os, params.weights);
}

PolicyParams load_policy_checkpoint(std::istream& is) {
  std::string header;
  if (!std::getline(is, header))
    throw Error("bad-checkpoint", "empty checkpoint");
  const auto j = nlohmann::json::parse(header);
  if (j.at("format") != "policy-checkpoint")
    throw Error("bad-checkpoint", "not a policy checkpoint");
  PolicyParams p = make_policy(j.at("d").get<std::uint32_t>());
  p.version = j.at("version").get<std::uint64_t>();
  read_double_row(is, p.weights);
  return p;
}

void save_prm_checkpoint(const PRMCheckpoint& ckpt, std::ostream& os) {
  nlohmann::json meta(ckpt.metadata);
  os << "{\"format\":\"prm-checkpoint\",\"fmt_version\":1,\"d\":"
     << ckpt.prm.dim << ",\"version\":" << ckpt.prm.version
     << ",\"policy_version\":" << ckpt.frozen_policy.version
     << ",\"metadata\":" << meta.dump() << "}\n";
  write_double_row(os, ckpt.prm.weights);
  write_double_row(os, ckpt.frozen_policy.weights);
}

PRMCheckpoint load_prm_checkpoint(std::istream& is) {
  std::string header;
  if (!std::getline(is, header))
    throw Error("bad-checkpoint", "empty checkpoint");
  const auto j = nlohmann::json::parse(header);
  if (j.at("format") != "prm-checkpoint")
    throw Error("bad-checkpoint", "not a prm checkpoint");
  PRMCheckpoint ckpt;
  const auto d = j.at("d").get<std::uint32_t>();
  ckpt.prm = make_prm(d);
  ckpt.prm.version = j.at("version").get<std::uint64_t>();
  ckpt.frozen_policy = make_policy(d);
  ckpt.frozen_policy.version = j.at("policy_version").get<std::uint64_t>();
  if (j.contains("metadata"))
    ckpt.metadata =
        j.at("metadata").get<std::map<std::string, std::string>>();
  read_double_row(is, ckpt.prm.weights);
  read_double_row(is, ckpt.frozen_policy.weights);
  return ckpt;
}

void write_text_file(const std::string& path, const std::string& contents) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("io", "cannot open for writing: " + path);
  os << contents;
  if (!os) throw Error("io", "write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("io", "cannot open: " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace steprl
