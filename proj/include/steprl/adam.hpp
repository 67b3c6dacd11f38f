#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "steprl/policy.hpp"

namespace steprl {

struct AdamConfig {
  double lr = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Dense first/second-moment state. Coordinates that never see gradient stay
// exactly zero, so checkpoints of mostly-untouched vectors stay small.
struct AdamState {
  std::uint64_t t = 0;
  std::vector<double> m;
  std::vector<double> v;

  explicit AdamState(std::size_t dim = 0) : m(dim, 0.0), v(dim, 0.0) {}
};

// One descent step: params -= lr * mhat / (sqrt(vhat) + eps). Callers that
// maximize pass the negated gradient. Throws Error("diverged") on non-finite
// gradient entries.
void adam_step(std::span<double> params, const SparseVec& grad,
               AdamState& state, const AdamConfig& config);

void save_adam_state(const AdamState& state, std::ostream& os);
AdamState load_adam_state(std::istream& is);

}  // namespace steprl
