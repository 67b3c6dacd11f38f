#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "steprl/adam.hpp"
#include "steprl/env.hpp"
#include "steprl/error.hpp"
#include "steprl/objectives.hpp"
#include "steprl/rng.hpp"

using namespace steprl;

namespace {

EnvSpec small_spec() {
  EnvSpec s;
  s.kind = EnvKind::arithmetic_chain;
  s.modulus = 5;
  s.operand_count = 3;
  s.operator_set = {ArithOp::add};
  return s;
}

// Group with hand-set PRM reward caches; the prm/policy arguments are then
// never consulted by airl_step_advantages.
GroupRollouts cached_group(std::vector<std::vector<double>> rewards) {
  GroupRollouts g;
  g.question_id = 1;
  for (auto& rw : rewards) {
    Rollout r;
    r.question_id = 1;
    for (std::size_t i = 0; i < rw.size(); ++i)
      r.steps.push_back({static_cast<std::int64_t>(i), i + 1 == rw.size(),
                         static_cast<Answer>(i)});
    r.step_logprobs.assign(rw.size(), -1.0);
    r.prm_rewards = rw;
    g.rollouts.push_back(std::move(r));
  }
  return g;
}

}  // namespace

TEST_CASE("grpo_advantages: examples and degenerate groups") {
  CHECK(grpo_advantages(std::vector<double>{1, 1, 1, 1}, 1e-8) ==
        std::vector<double>{0, 0, 0, 0});

  const auto a = grpo_advantages(std::vector<double>{1, 0, 0, 0}, 0.0);
  CHECK(a[0] == doctest::Approx(1.7320).epsilon(1e-3));
  CHECK(a[1] == doctest::Approx(-0.5774).epsilon(1e-3));
  CHECK(a[2] == doctest::Approx(-0.5774).epsilon(1e-3));
  CHECK(a[3] == doctest::Approx(-0.5774).epsilon(1e-3));

  const auto b = grpo_advantages(std::vector<double>{1, 1, 0, 0}, 0.0);
  CHECK(b == std::vector<double>{1, 1, -1, -1});

  CHECK_THROWS_WITH_AS(grpo_advantages(std::vector<double>{1}, 0.0),
                       doctest::Contains("group-too-small"), Error);
}

TEST_CASE("grpo advantages sum to zero") {
  auto rng = Rng::stream(41, "sum0");
  for (int t = 0; t < 200; ++t) {
    const int g = 2 + static_cast<int>(rng.next_below(14));
    std::vector<double> r(static_cast<std::size_t>(g));
    for (auto& x : r) x = static_cast<double>(rng.next_below(2));
    const auto adv = grpo_advantages(r, 1e-8);
    double s = 0.0;
    for (double x : adv) s += x;
    CHECK(std::abs(s) < 1e-9);
  }
}

TEST_CASE("airl_step_advantages: reward-to-go minus group mean, std-scaled") {
  const auto spec = small_spec();
  const auto prm = make_prm(1024);
  const auto policy = make_policy(1024);
  Question q;
  q.id = 1;

  // single-step rollouts with rewards [2, 0] -> A = [1, -1]
  auto g1 = cached_group({{2.0}, {0.0}});
  const auto a1 = airl_step_advantages(g1, prm, policy, spec, q, 0.0);
  CHECK(a1[0][0] == doctest::Approx(1.0));
  CHECK(a1[1][0] == doctest::Approx(-1.0));

  // two-step rollouts [1,1] vs [0,0] -> A1 = [1,0], A2 = [-1,-1]
  auto g2 = cached_group({{1.0, 1.0}, {0.0, 0.0}});
  const auto a2 = airl_step_advantages(g2, prm, policy, spec, q, 0.0);
  CHECK(a2[0][0] == doctest::Approx(1.0));
  CHECK(a2[0][1] == doctest::Approx(0.0));
  CHECK(a2[1][0] == doctest::Approx(-1.0));
  CHECK(a2[1][1] == doctest::Approx(-1.0));

  // identical rollouts -> all zeros
  auto g3 = cached_group({{0.7, -0.2}, {0.7, -0.2}, {0.7, -0.2}});
  const auto a3 = airl_step_advantages(g3, prm, policy, spec, q, 1e-8);
  for (const auto& per : a3)
    for (double v : per) CHECK(v == 0.0);
}

TEST_CASE("clipped_term closed-form cases") {
  CHECK(clipped_term(1.0, 0.37, 0.2) == doctest::Approx(0.37));
  CHECK(clipped_term(2.0, 1.0, 0.2) == doctest::Approx(1.2));
  CHECK(clipped_term(0.5, -1.0, 0.2) == doctest::Approx(-0.8));
}

TEST_CASE("kl_k3 closed-form cases and nonnegativity") {
  CHECK(kl_k3(-2.5, -2.5) == 0.0);
  CHECK(kl_k3(0.0, std::log(2.0)) ==
        doctest::Approx(0.306853).epsilon(1e-6));
  auto rng = Rng::stream(42, "kl");
  for (int i = 0; i < 10000; ++i) {
    const double a = -10.0 * rng.next_double();
    const double b = -10.0 * rng.next_double();
    CHECK(kl_k3(a, b) >= 0.0);
  }
}

namespace {

struct Fixture {
  EnvSpec spec = small_spec();
  Question q;
  PolicyParams theta = make_policy(1u << 12);
  PolicyParams theta_old = make_policy(1u << 12);
  PolicyParams theta_ref = make_policy(1u << 12);
  PRMParams prm = make_prm(1u << 12);
  GroupRollouts group;
  CompositeObjectiveConfig cfg;

  explicit Fixture(std::uint64_t seed, bool randomize_params) {
    auto rng = Rng::stream(seed, "fixture");
    q = generate_question(spec, 1, rng);
    cfg.group_size = 4;
    if (randomize_params) {
      for (auto& w : theta.weights) w = 0.4 * (2 * rng.next_double() - 1);
      for (auto& w : theta_old.weights) w = 0.4 * (2 * rng.next_double() - 1);
      for (auto& w : theta_ref.weights) w = 0.4 * (2 * rng.next_double() - 1);
      for (auto& w : prm.weights) w = 0.4 * (2 * rng.next_double() - 1);
    }
    group.question_id = q.id;
    for (int k = 0; k < 4; ++k)
      group.rollouts.push_back(
          sample_chain(theta_old, spec, q, 0.9, rng));
  }
};

}  // namespace

TEST_CASE("j_grpo at theta == theta_old == theta_ref") {
  Fixture fx(50, false);
  // make outcomes mixed by hand so advantages are nonzero
  fx.group.rollouts[0].outcome_reward = 1;
  fx.group.rollouts[1].outcome_reward = 0;
  fx.group.rollouts[2].outcome_reward = 0;
  fx.group.rollouts[3].outcome_reward = 1;

  const auto res = j_grpo(fx.group, fx.q, fx.spec, fx.theta, fx.theta_old,
                          fx.theta_ref, fx.cfg);
  // ratios are 1 and advantages sum to zero, so the value vanishes
  CHECK(res.value == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(res.mean_kl == 0.0);

  // gradient equals the REINFORCE-with-baseline gradient
  const auto adv = grpo_advantages(std::vector<double>{1, 0, 0, 1},
                                   fx.cfg.advantage_floor);
  std::vector<double> manual(fx.theta.weights.size(), 0.0);
  for (std::size_t k = 0; k < 4; ++k) {
    const auto& r = fx.group.rollouts[k];
    for (std::size_t i = 0; i < r.steps.size(); ++i) {
      const auto g = grad_logprob(fx.theta, fx.spec, fx.q,
                                  std::span<const Step>(r.steps).first(i),
                                  r.steps[i]);
      for (const auto& f : g) manual[f.index] += adv[k] * f.value / 4.0;
    }
  }
  for (const auto& f : res.grad)
    CHECK(f.value == doctest::Approx(manual[f.index]).epsilon(1e-9));
}

TEST_CASE("all-equal outcomes: zero value and zero advantage gradient") {
  Fixture fx(51, false);
  for (auto& r : fx.group.rollouts) r.outcome_reward = 1;
  fx.cfg.kl_beta = 0.0;  // isolate the advantage path
  const auto res = j_grpo(fx.group, fx.q, fx.spec, fx.theta, fx.theta_old,
                          fx.theta_ref, fx.cfg);
  CHECK(res.value == 0.0);
  CHECK(res.grad.empty());
}

TEST_CASE("j_airl with identity ratios reduces to the advantage sum") {
  Fixture fx(52, true);
  fx.theta = fx.theta_old;
  const auto res = j_airl(fx.group, fx.q, fx.spec, fx.theta, fx.theta_old,
                          fx.prm, fx.cfg);
  const auto adv = airl_step_advantages(fx.group, fx.prm, fx.theta_old,
                                        fx.spec, fx.q, fx.cfg.advantage_floor);
  double expect = 0.0;
  for (const auto& per : adv)
    for (double a : per) expect += a / 4.0;
  CHECK(res.value == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("composite boundaries: lambda 0 and 1 match the parts exactly") {
  Fixture fx(53, true);
  fx.cfg.lambda = 0.0;
  const auto grpo_only = composite_objective(fx.group, fx.q, fx.spec, fx.theta,
                                             fx.theta_old, fx.theta_ref,
                                             fx.prm, fx.cfg);
  const auto grpo = j_grpo(fx.group, fx.q, fx.spec, fx.theta, fx.theta_old,
                           fx.theta_ref, fx.cfg);
  CHECK(grpo_only.value == grpo.value);

  fx.cfg.lambda = 1.0;
  const auto airl_only = composite_objective(fx.group, fx.q, fx.spec, fx.theta,
                                             fx.theta_old, fx.theta_ref,
                                             fx.prm, fx.cfg);
  const auto airl = j_airl(fx.group, fx.q, fx.spec, fx.theta, fx.theta_old,
                           fx.prm, fx.cfg);
  CHECK(airl_only.value == airl.value);

  fx.cfg.lambda = 0.5;
  const auto both = composite_objective(fx.group, fx.q, fx.spec, fx.theta,
                                        fx.theta_old, fx.theta_ref, fx.prm,
                                        fx.cfg);
  CHECK(both.value ==
        doctest::Approx(0.5 * airl.value + 0.5 * grpo.value).epsilon(1e-12));
}

TEST_CASE("lambda 0 never evaluates the PRM advantage path") {
  Fixture fx(54, false);
  fx.group.rollouts[0].outcome_reward = 1;
  // poison the PRM: any reward query would propagate NaN into the result
  for (auto& w : fx.prm.weights)
    w = std::numeric_limits<double>::quiet_NaN();
  fx.cfg.lambda = 0.0;
  const auto res = composite_objective(fx.group, fx.q, fx.spec, fx.theta,
                                       fx.theta_old, fx.theta_ref, fx.prm,
                                       fx.cfg);
  CHECK(std::isfinite(res.value));
  for (const auto& f : res.grad) CHECK(std::isfinite(f.value));
}

TEST_CASE("clip dead-zone: ratio beyond 1+eps with positive advantage") {
  // ratio path contributes no gradient when the clipped branch is active
  CHECK(clipped_term(1.5, 2.0, 0.2) == doctest::Approx(2.4));
  Fixture fx(55, true);
  // push theta so at least one step ratio clips; then verify the j_airl
  // gradient has no entry whose magnitude scales with that ratio: done via
  // the finite-difference oracle in the acceptance checks. Here we pin the
  // scalar behaviour only.
  CHECK(clipped_term(10.0, 1.0, 0.2) == 1.2);
  CHECK(clipped_term(10.0, -1.0, 0.2) == -10.0);  // min picks the raw branch
}

TEST_CASE("adam: zero gradient is a no-op, constant gradient approaches lr") {
  AdamConfig cfg;
  cfg.lr = 1e-2;
  std::vector<double> params(4, 1.0);
  AdamState st(4);
  adam_step(params, {}, st, cfg);
  CHECK(params == std::vector<double>{1.0, 1.0, 1.0, 1.0});

  SparseVec g = {{1, 0.5}, {3, -2.0}};
  double prev1 = params[1];
  for (int i = 0; i < 500; ++i) adam_step(params, g, st, cfg);
  // after many identical steps the per-step movement approaches lr * sign(g)
  prev1 = params[1];
  adam_step(params, g, st, cfg);
  CHECK(prev1 - params[1] == doctest::Approx(cfg.lr).epsilon(1e-3));
  CHECK(params[0] == 1.0);  // untouched coordinate stays exactly put
}

TEST_CASE("adam state round-trips bit-for-bit") {
  AdamConfig cfg;
  std::vector<double> params(8, 0.0);
  AdamState st(8);
  auto rng = Rng::stream(60, "adam");
  for (int i = 0; i < 25; ++i) {
    SparseVec g = {{rng.next_below(8) & 7u, 2.0 * rng.next_double() - 1.0}};
    adam_step(params, g, st, cfg);
  }
  std::ostringstream os;
  save_adam_state(st, os);
  std::istringstream is(os.str());
  const auto loaded = load_adam_state(is);
  CHECK(loaded.t == st.t);
  CHECK(loaded.m == st.m);
  CHECK(loaded.v == st.v);
}
