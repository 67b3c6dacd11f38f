#pragma once

#include <string>
#include <vector>

namespace steprl {

struct CheckResult {
  std::string name;
  bool pass = false;
  double measured = 0.0;   // worst observed deviation / statistic
  double tolerance = 0.0;
  std::string detail;
};

// Fast numerical ground-truth checks (reward identity, gradient oracles,
// discriminator convergence, KL, advantages, search vs oracle, UCT,
// aggregation). Each runs in seconds and is deterministic.
CheckResult check_reward_identity();
CheckResult check_gradient_oracles();
CheckResult check_discriminator_convergence();
CheckResult check_kl_term();
CheckResult check_grpo_invariants();
CheckResult check_search_vs_oracle();
CheckResult check_uct_values();
CheckResult check_aggregation_definitions();

std::vector<CheckResult> run_oracle_checks();

std::string check_result_line(const CheckResult& r);

}  // namespace steprl
