#include "steprl/env.hpp"

#include <algorithm>
#include <numeric>

#include "steprl/error.hpp"

namespace steprl {

namespace {

constexpr QuestionId kGraphStartNode = 0;

std::int64_t apply_op(ArithOp op, std::int64_t a, std::int64_t b,
                      std::int64_t m) {
  switch (op) {
    case ArithOp::add:
      return (a + b) % m;
    case ArithOp::mul:
      return (a * b) % m;
  }
  return 0;
}

// Left-associative running value after `ops_applied` operations.
std::int64_t arith_running_value(const EnvSpec& spec, const Question& q,
                                 int ops_applied) {
  std::int64_t v = q.payload[0];
  for (int i = 0; i < ops_applied; ++i) {
    const auto op =
        static_cast<ArithOp>(q.payload[2 * i + 1] - spec.modulus);
    v = apply_op(op, v, q.payload[2 * (i + 1)], spec.modulus);
  }
  return v;
}

struct GraphView {
  int layers = 0;
  int branching = 0;
  int width = 0;
  QuestionId goal = 0;
  QuestionId first_sink = 0;
  std::span<const std::int64_t> edges;  // b targets per non-sink node

  static GraphView of(const Question& q) {
    GraphView g;
    g.layers = static_cast<int>(q.payload[0]);
    g.branching = static_cast<int>(q.payload[1]);
    g.width = static_cast<int>(q.payload[2]);
    g.goal = q.payload[3];
    g.first_sink = q.payload[4];
    g.edges = std::span<const std::int64_t>(q.payload).subspan(5);
    return g;
  }

  bool is_sink(QuestionId node) const { return node >= first_sink; }

  std::span<const std::int64_t> targets(QuestionId node) const {
    return edges.subspan(static_cast<std::size_t>(node) * branching,
                         branching);
  }

  bool reaches_goal(QuestionId node) const {
    if (node == goal) return true;
    if (is_sink(node)) return false;
    for (auto t : targets(node))
      if (reaches_goal(t)) return true;
    return false;
  }
};

QuestionId graph_current_node(std::span<const Step> prefix) {
  return prefix.empty() ? kGraphStartNode : prefix.back().action_id;
}

Question generate_arithmetic(const EnvSpec& spec, QuestionId id, Rng& rng) {
  Question q;
  q.id = id;
  q.env_id = env_kind_name(spec.kind);
  const int k = spec.operand_count;
  q.payload.reserve(2 * k - 1);
  for (int i = 0; i < k; ++i) {
    q.payload.push_back(
        static_cast<std::int64_t>(rng.next_below(spec.modulus)));
    if (i + 1 < k) {
      const auto op =
          spec.operator_set[rng.next_below(spec.operator_set.size())];
      q.payload.push_back(spec.modulus + static_cast<std::int64_t>(op));
    }
  }
  std::int64_t v = q.payload[0];
  for (int i = 1; i < k; ++i) {
    const auto op = static_cast<ArithOp>(q.payload[2 * i - 1] - spec.modulus);
    v = apply_op(op, v, q.payload[2 * i], spec.modulus);
  }
  q.ground_truth = v;
  return q;
}

Question generate_graph(const EnvSpec& spec, QuestionId id, Rng& rng) {
  const int L = spec.layers;
  const int b = spec.branching;
  const int w = b + 1;
  const QuestionId first_sink = 1 + static_cast<QuestionId>(L - 2) * w;
  const int non_sink = 1 + (L - 2) * w;

  // Rejected instances (goal unreachable from start) are regenerated from
  // the same stream, so the result is still a pure function of the stream.
  for (;;) {
    Question q;
    q.id = id;
    q.env_id = env_kind_name(spec.kind);
    const QuestionId goal = first_sink + static_cast<QuestionId>(rng.next_below(w));
    q.payload = {L, b, w, goal, first_sink};
    std::vector<std::int64_t> pool(w);
    for (int node = 0; node < non_sink; ++node) {
      const int layer = node == 0 ? 0 : (node - 1) / w + 1;
      const QuestionId next_base = 1 + static_cast<QuestionId>(layer) * w;
      std::iota(pool.begin(), pool.end(), next_base);
      // Partial Fisher-Yates: first b entries are distinct targets.
      for (int i = 0; i < b; ++i) {
        const auto j = i + rng.next_below(static_cast<std::uint64_t>(w - i));
        std::swap(pool[i], pool[j]);
      }
      std::sort(pool.begin(), pool.begin() + b);
      q.payload.insert(q.payload.end(), pool.begin(), pool.begin() + b);
    }
    q.ground_truth = goal;
    if (GraphView::of(q).reaches_goal(kGraphStartNode)) return q;
  }
}

}  // namespace

const char* env_kind_name(EnvKind kind) {
  return kind == EnvKind::arithmetic_chain ? "arithmetic-chain" : "graph-path";
}

EnvKind env_kind_from_name(const std::string& name) {
  if (name == "arithmetic-chain") return EnvKind::arithmetic_chain;
  if (name == "graph-path") return EnvKind::graph_path;
  throw Error("bad-env-spec", "unknown environment kind '" + name + "'");
}

int EnvSpec::min_solution_length() const {
  return kind == EnvKind::arithmetic_chain ? operand_count - 1 : layers - 1;
}

int EnvSpec::resolved_max_steps() const {
  return max_steps == 0 ? min_solution_length() : max_steps;
}

void EnvSpec::validate() const {
  if (kind == EnvKind::arithmetic_chain) {
    if (modulus < 2) throw Error("bad-env-spec", "modulus must be >= 2");
    if (operand_count < 2)
      throw Error("bad-env-spec", "operand count must be >= 2");
    if (operator_set.empty())
      throw Error("bad-env-spec", "operator set must be nonempty");
  } else {
    if (layers < 2) throw Error("bad-env-spec", "layers must be >= 2");
    if (branching < 2) throw Error("bad-env-spec", "branching must be >= 2");
  }
  if (max_steps != 0 && max_steps < min_solution_length())
    throw Error("bad-env-spec", "max_steps below minimal solution length");
}

Question generate_question(const EnvSpec& spec, QuestionId id, Rng& rng) {
  spec.validate();
  return spec.kind == EnvKind::arithmetic_chain
             ? generate_arithmetic(spec, id, rng)
             : generate_graph(spec, id, rng);
}

std::vector<ActionCandidate> legal_actions(const EnvSpec& spec,
                                           const Question& q,
                                           std::span<const Step> prefix) {
  if (!prefix.empty() && prefix.back().is_terminal)
    throw Error("chain-finished");

  std::vector<ActionCandidate> out;
  if (spec.kind == EnvKind::arithmetic_chain) {
    const int chain_len = spec.operand_count - 1;
    const bool final_position =
        static_cast<int>(prefix.size()) == chain_len - 1;
    out.reserve(static_cast<std::size_t>(spec.modulus));
    for (std::int64_t v = 0; v < spec.modulus; ++v) {
      ActionCandidate c;
      c.action_id = v;
      c.step.action_id = v;
      c.step.is_terminal = final_position;
      c.step.declared_answer = final_position ? v : 0;
      out.push_back(c);
    }
  } else {
    const auto g = GraphView::of(q);
    const auto node = graph_current_node(prefix);
    for (auto t : g.targets(node)) {
      ActionCandidate c;
      c.action_id = t;
      c.step.action_id = t;
      c.step.is_terminal = g.is_sink(t);
      c.step.declared_answer = c.step.is_terminal ? t : 0;
      out.push_back(c);
    }
  }
  return out;
}

int check_answer(const EnvSpec& spec, const Question& q,
                 std::span<const Step> chain) {
  (void)spec;
  if (chain.empty() || !chain.back().is_terminal)
    throw Error("incomplete-chain");
  return chain.back().declared_answer == q.ground_truth ? 1 : 0;
}

int step_correct(const EnvSpec& spec, const Question& q,
                 std::span<const Step> prefix, const Step& step) {
  const auto cands = legal_actions(spec, q, prefix);
  const bool legal = std::any_of(cands.begin(), cands.end(),
                                 [&](const ActionCandidate& c) {
                                   return c.step == step;
                                 });
  if (!legal) throw Error("illegal-step");

  if (spec.kind == EnvKind::arithmetic_chain) {
    if (step.is_terminal) return step.declared_answer == q.ground_truth;
    const int ops_applied = static_cast<int>(prefix.size()) + 1;
    return step.action_id == arith_running_value(spec, q, ops_applied);
  }
  return GraphView::of(q).reaches_goal(step.action_id);
}

std::vector<Step> reference_solution(const EnvSpec& spec, const Question& q) {
  std::vector<Step> chain;
  while (chain.empty() || !chain.back().is_terminal) {
    const auto cands = legal_actions(spec, q, chain);
    bool advanced = false;
    for (const auto& c : cands) {
      if (step_correct(spec, q, chain, c.step) == 1) {
        chain.push_back(c.step);
        advanced = true;
        break;
      }
    }
    if (!advanced) throw Error("no-reference-solution");
  }
  return chain;
}

std::vector<Question> generate_question_set(const EnvSpec& spec,
                                            std::size_t count,
                                            std::uint64_t seed,
                                            std::string_view purpose,
                                            QuestionId id_base) {
  std::vector<Question> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    auto rng = Rng::stream(seed, purpose, id_base + static_cast<QuestionId>(i));
    out.push_back(
        generate_question(spec, id_base + static_cast<QuestionId>(i), rng));
  }
  return out;
}

}  // namespace steprl
