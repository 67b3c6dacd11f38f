#pragma once

#include <span>
#include <vector>

#include "steprl/rng.hpp"
#include "steprl/types.hpp"

namespace steprl {

enum class EnvKind { arithmetic_chain, graph_path };
enum class ArithOp { add = 0, mul = 1 };

// Environment parameters. Two synthetic families:
//
//  arithmetic-chain: evaluate a1 op1 a2 op2 ... ak left-associatively mod m.
//    The chain has k-1 steps; step i declares the running value after the
//    i-th operation, and the last step is the terminal answer declaration.
//    Payload tokens: [a1, m+op1, a2, m+op2, ..., ak].
//
//  graph-path: layered DAG, single start node, layers of width b+1, every
//    non-sink node has b distinct outgoing edges into the next layer. One
//    sink is the goal; edges into the sink layer are terminal steps that
//    declare the reached sink id. action_id is the target node id.
//    Payload tokens: [L, b, w, goal, first_sink_id, then b sorted targets
//    per non-sink node in node-id order].
struct EnvSpec {
  EnvKind kind = EnvKind::arithmetic_chain;

  // arithmetic-chain
  std::int64_t modulus = 10;
  int operand_count = 5;
  std::vector<ArithOp> operator_set = {ArithOp::add};

  // graph-path
  int layers = 6;
  int branching = 3;

  // 0 means the minimal solution length (k-1 / L-1).
  int max_steps = 0;

  int min_solution_length() const;
  int resolved_max_steps() const;
  void validate() const;  // throws Error("bad-env-spec") on violations
};

struct ActionCandidate {
  std::int64_t action_id = 0;
  Step step;
};

// Environment id tags used in Question::env_id and config files.
const char* env_kind_name(EnvKind kind);
EnvKind env_kind_from_name(const std::string& name);

Question generate_question(const EnvSpec& spec, QuestionId id, Rng& rng);

// Candidates in canonical order (ascending action_id). Throws
// Error("chain-finished") if prefix already ends in a terminal step.
std::vector<ActionCandidate> legal_actions(const EnvSpec& spec,
                                           const Question& q,
                                           std::span<const Step> prefix);

// Binary outcome reward. Throws Error("incomplete-chain") unless the chain
// ends with a terminal step.
int check_answer(const EnvSpec& spec, const Question& q,
                 std::span<const Step> chain);

// Ground-truth step oracle: 1 iff the step is on-track (arithmetic: declares
// the true running value; graph: the edge lies on some path to the goal).
// Throws Error("illegal-step") if the step is not legal at this prefix.
int step_correct(const EnvSpec& spec, const Question& q,
                 std::span<const Step> prefix, const Step& step);

// The canonical worked solution shipped with the question (the analog of a
// dataset's reference chain): arithmetic declares every true running value,
// graph follows the lowest-id on-goal path. Always verifies correct.
std::vector<Step> reference_solution(const EnvSpec& spec, const Question& q);

// Deterministic question set: fixed (spec, seed, purpose, id_base) always
// regenerates the identical set bit-for-bit.
std::vector<Question> generate_question_set(const EnvSpec& spec,
                                            std::size_t count,
                                            std::uint64_t seed,
                                            std::string_view purpose,
                                            QuestionId id_base = 0);

}  // namespace steprl
