#include "steprl/adam.hpp"

#include <cmath>
#include <istream>
#include <ostream>

#include "steprl/error.hpp"
#include "steprl/io.hpp"

namespace steprl {

void adam_step(std::span<double> params, const SparseVec& grad,
               AdamState& state, const AdamConfig& config) {
  for (const auto& g : grad)
    if (!std::isfinite(g.value)) throw Error("diverged", "non-finite gradient");

  const std::size_t d = params.size();
  if (state.m.size() != d) {
    state.m.assign(d, 0.0);
    state.v.assign(d, 0.0);
  }
  ++state.t;
  for (std::size_t i = 0; i < d; ++i) {
    state.m[i] *= config.beta1;
    state.v[i] *= config.beta2;
  }
  for (const auto& g : grad) {
    state.m[g.index] += (1.0 - config.beta1) * g.value;
    state.v[g.index] += (1.0 - config.beta2) * g.value * g.value;
  }
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < d; ++i) {
    if (state.m[i] == 0.0 && state.v[i] == 0.0) continue;
    const double mhat = state.m[i] / c1;
    const double vhat = state.v[i] / c2;
    params[i] -= config.lr * mhat / (std::sqrt(vhat) + config.eps);
    if (!std::isfinite(params[i]))
      throw Error("diverged", "non-finite parameter after update");
  }
}

void save_adam_state(const AdamState& state, std::ostream& os) {
  os << "adam-state 1 " << state.t << " " << state.m.size() << "\n";
  write_double_row(os, state.m);
  write_double_row(os, state.v);
}

AdamState load_adam_state(std::istream& is) {
  std::string tag;
  int version = 0;
  std::uint64_t t = 0;
  std::size_t dim = 0;
  is >> tag >> version >> t >> dim;
  if (tag != "adam-state" || version != 1)
    throw Error("bad-checkpoint", "not an adam-state record");
  AdamState state(dim);
  state.t = t;
  read_double_row(is, state.m);
  read_double_row(is, state.v);
  return state;
}

}  // namespace steprl
