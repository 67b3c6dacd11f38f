// Times the serial reference path against the OpenMP path for the two
// per-question kernels (rollout generation and best-of-n search) and checks
// that both produce identical results.

#include <chrono>
#include <iostream>
#include <vector>

#include "steprl/env.hpp"
#include "steprl/parallel.hpp"
#include "steprl/policy.hpp"
#include "steprl/rng.hpp"
#include "steprl/search.hpp"

using namespace steprl;
namespace chrono = std::chrono;

namespace {

double run_rollouts(const EnvSpec& spec, const std::vector<Question>& qs,
                    const PolicyParams& policy, int threads,
                    std::vector<Answer>& answers) {
  answers.assign(qs.size(), 0);
  const auto t0 = chrono::steady_clock::now();
  parallel_for(qs.size(), threads, [&](std::size_t i) {
    auto rng = Rng::stream(1, "bench-rollout", static_cast<std::uint64_t>(i));
    Answer last = 0;
    for (int k = 0; k < 32; ++k)
      last = sample_chain(policy, spec, qs[i], 0.7, rng).final_answer();
    answers[i] = last;
  });
  const auto t1 = chrono::steady_clock::now();
  return chrono::duration<double>(t1 - t0).count();
}

double run_search(const EnvSpec& spec, const std::vector<Question>& qs,
                  const PolicyParams& policy, const StepScorer& scorer,
                  int threads, std::vector<Answer>& answers) {
  SearchConfig cfg;
  cfg.n = 16;
  answers.assign(qs.size(), 0);
  const auto t0 = chrono::steady_clock::now();
  parallel_for(qs.size(), threads, [&](std::size_t i) {
    auto rng = Rng::stream(1, "bench-search", static_cast<std::uint64_t>(i));
    answers[i] = best_of_n(policy, scorer, spec, qs[i], cfg, rng).answer;
  });
  const auto t1 = chrono::steady_clock::now();
  return chrono::duration<double>(t1 - t0).count();
}

}  // namespace

int main() {
  EnvSpec spec;
  spec.kind = EnvKind::arithmetic_chain;
  const auto qs = generate_question_set(spec, 256, 1, "bench-questions");
  const auto policy = make_policy(1u << 18);
  const auto scorer = make_oracle_scorer(spec);
  const int hw = hardware_threads();

  std::vector<Answer> serial, parallel;
  const double tr1 = run_rollouts(spec, qs, policy, 1, serial);
  const double trn = run_rollouts(spec, qs, policy, hw, parallel);
  const bool rollout_match = serial == parallel;
  std::cout << "rollouts: serial " << tr1 << " s, " << hw << " threads "
            << trn << " s, speedup " << tr1 / trn
            << (rollout_match ? " (identical results)\n"
                              : " (RESULTS DIFFER)\n");

  const double ts1 = run_search(spec, qs, policy, scorer, 1, serial);
  const double tsn = run_search(spec, qs, policy, scorer, hw, parallel);
  const bool search_match = serial == parallel;
  std::cout << "best-of-16: serial " << ts1 << " s, " << hw << " threads "
            << tsn << " s, speedup " << ts1 / tsn
            << (search_match ? " (identical results)\n"
                             : " (RESULTS DIFFER)\n");

  return rollout_match && search_match ? 0 : 1;
}
