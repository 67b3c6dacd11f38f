#pragma once

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "steprl/policy.hpp"
#include "steprl/prm.hpp"
#include "steprl/replay_buffer.hpp"
#include "steprl/types.hpp"

namespace steprl {

// All persisted floats use 17 significant decimal digits ("%.17g"), which
// round-trips IEEE binary64 exactly. Writers are hand-rolled so files are
// byte-stable; readers go through the JSON parser where the format is JSON.
std::string fmt_g17(double v);

void write_double_row(std::ostream& os, std::span<const double> values);
void read_double_row(std::istream& is, std::span<double> out);

// --- rollouts / replay buffer (line-delimited JSON) ---
std::string rollout_to_line(const Rollout& r);
Rollout rollout_from_line(const std::string& line);

void save_buffer(const ReplayBuffer& buffer, std::ostream& os);
ReplayBuffer load_buffer(std::istream& is, std::size_t capacity,
                         std::size_t per_question_cap);

// --- question sets (line-delimited JSON) ---
std::string question_to_line(const Question& q);
Question question_from_line(const std::string& line);
void save_questions(std::span<const Question> qs, std::ostream& os);
std::vector<Question> load_questions(std::istream& is);

// --- checkpoints ---
void save_policy_checkpoint(const PolicyParams& params, std::ostream& os);
PolicyParams load_policy_checkpoint(std::istream& is);

struct PRMCheckpoint {
  PRMParams prm;
  // Final training policy snapshot: the log pi side of the step reward at
  // search time, independent of whichever generator is being guided.
  PolicyParams frozen_policy;
  std::map<std::string, std::string> metadata;
};

void save_prm_checkpoint(const PRMCheckpoint& ckpt, std::ostream& os);
PRMCheckpoint load_prm_checkpoint(std::istream& is);

// File-path helpers (throw Error("io") / Error("config-missing")).
void write_text_file(const std::string& path, const std::string& contents);
std::string read_text_file(const std::string& path);

}  // namespace steprl
