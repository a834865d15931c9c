#include <doctest.h>

#include <cmath>
#include <random>

#include "unrealdc/losses.hpp"

using namespace unrealdc::losses;
using unrealdc::minidoom::Observation;

namespace {

Rollout rollout(std::vector<double> rewards, bool terminal, std::optional<double> bootstrap = {}) {
  Rollout r;
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    r.frames.push_back(Observation::zeros(2, 2));
    r.actions.push_back(0);
    r.dones.push_back(terminal && i + 1 == rewards.size());
  }
  r.rewards = std::move(rewards);
  r.bootstrap = bootstrap;
  return r;
}

Observation filled(int h, int w, float v) {
  auto o = Observation::zeros(h, w);
  for (auto& p : o.pixels) p = v;
  return o;
}

}  // namespace

TEST_CASE("n-step returns") {
  CHECK(n_step_returns(rollout({0, 0, 1}, true), 1.0) == std::vector<double>{1, 1, 1});
  CHECK(n_step_returns(rollout({1}, false, 2.0), 0.99)[0] == doctest::Approx(2.98).epsilon(1e-15));
  CHECK(n_step_returns(rollout({0, 0, 0, 0}, true), 0.9) == std::vector<double>(4, 0.0));
  // A done in the middle restarts the recursion.
  auto r = rollout({1, 2, 3}, false, 10.0);
  r.dones[0] = true;
  const auto R = n_step_returns(r, 0.5);
  CHECK(R[0] == 1.0);
  CHECK(R[1] == 2.0 + 0.5 * (3.0 + 0.5 * 10.0));
  CHECK_THROWS_AS(rollout({1}, true, 1.0).validate(), std::invalid_argument);
}

TEST_CASE("policy loss") {
  const std::vector<double> R{1.0, 2.0}, V{1.0, 2.0}, lp{-0.3, -1.2};
  CHECK(policy_loss(R, V, lp) == 0.0);
  const std::vector<double> one{1.0}, zero{0.0};
  CHECK(policy_loss(one, zero, std::vector<double>{0.0}) == 0.0);
  CHECK(policy_loss(one, zero, std::vector<double>{std::log(0.5)}) ==
        doctest::Approx(0.6931471805599453).epsilon(1e-12));
  CHECK_THROWS_AS(policy_loss(one, zero, std::vector<double>{-INFINITY}), std::domain_error);
}

TEST_CASE("value and value-replay losses") {
  const std::vector<double> same{0.4, -1.0};
  CHECK(value_loss(same, same) == 0.0);
  CHECK(value_loss(std::vector<double>{1.0}, std::vector<double>{0.0}) == 0.5);
  CHECK(value_loss(std::vector<double>{2.0, 0.0}, std::vector<double>{1.0, 1.0}) == 1.0);

  CHECK(vr_loss(rollout({0.4, -1.0}, false, 0.0), 0.0, same) == 0.0);
  CHECK(vr_loss(rollout({1.0}, true), 0.99, std::vector<double>{0.0}) == 0.5);
  CHECK(vr_loss(rollout({2.0, 0.0}, true), 0.0, std::vector<double>{1.0, 1.0}) == 1.0);
}

TEST_CASE("reward prediction loss") {
  CHECK(reward_class(0.0) == RewardClass::Zero);
  CHECK(reward_class(0.3) == RewardClass::Positive);
  CHECK(reward_class(-0.02) == RewardClass::Negative);
  const std::array<double, 3> sure_negative{-1000.0, -1000.0, 0.0};
  CHECK(rp_loss(sure_negative, -0.02) == 0.0);
  const std::array<double, 3> uniform{0.0, 0.0, 0.0};
  for (const double r : {0.0, 1.0, -0.06}) {
    CHECK(rp_loss(uniform, r) == doctest::Approx(1.0986122886681098).epsilon(1e-12));
  }
}

TEST_CASE("pixel change pseudo reward") {
  const auto a = filled(4, 4, 0.25F);  // exact in binary
  for (const double v : pc_pseudo_reward(a, a, 2, 2)) CHECK(v == 0.0);
  for (const double v : pc_pseudo_reward(filled(4, 4, 0.0F), filled(4, 4, 1.0F), 2, 2)) CHECK(v == 1.0);

  auto b = a;
  // Bottom-left 2x2 region, every channel, +0.5.
  for (int y = 2; y < 4; ++y) {
    for (int x = 0; x < 2; ++x) {
      for (int c = 0; c < 3; ++c) b.pixels[static_cast<std::size_t>((y * 4 + x) * 3 + c)] += 0.5F;
    }
  }
  const auto pr = pc_pseudo_reward(a, b, 2, 2);
  CHECK(pr == std::vector<double>{0.0, 0.0, 0.5, 0.0});
  CHECK_THROWS_AS(pc_pseudo_reward(a, a, 3, 3), std::invalid_argument);
  CHECK_THROWS_AS(pc_pseudo_reward(a, filled(2, 4, 0.0F), 2, 2), std::invalid_argument);
}

TEST_CASE("pixel control loss") {
  const std::vector<std::vector<double>> zero_pr{{0.0, 0.0}};
  const std::vector<double> zero_q{0.0, 0.0};
  auto t0 = pc_targets(zero_pr, zero_q, 0.9);
  CHECK(pc_loss(t0, zero_pr) == 0.0);

  const std::vector<std::vector<double>> pr{{1.0, 1.0}};
  const auto t = pc_targets(pr, zero_q, 0.9);
  CHECK(t == pr);
  CHECK(pc_loss(t, zero_pr) == 1.0);  // 1/2 per region, two regions

  const std::vector<std::vector<double>> pr2{{0.5}, {0.25}};
  const auto t2 = pc_targets(pr2, std::vector<double>{2.0}, 0.5);
  CHECK(t2[1][0] == 0.25 + 0.5 * 2.0);
  CHECK(t2[0][0] == 0.5 + 0.5 * t2[1][0]);
  CHECK(pc_loss(t2, t2) == 0.0);
}

TEST_CASE("total loss") {
  LossWeights w;
  CHECK(total_loss({}, w) == 0.0);
  w.lambda_vr = w.lambda_rp = w.lambda_pc = 1.0;
  CHECK(total_loss({1, 1, 1, 1, 1}, w) == 5.0);
  w.lambda_vr = 1.0;
  w.lambda_rp = 0.5;
  w.lambda_pc = 0.05;
  CHECK(total_loss({0.5, 0.2, 0.1, 0.3, 0.4}, w) == doctest::Approx(0.97).epsilon(1e-12));
  try {
    total_loss({0.0, 0.0, NAN, 0.0, 0.0}, w);
    FAIL("expected NonFiniteComponent");
  } catch (const NonFiniteComponent& e) {
    CHECK(e.name() == "vr");
  }
  w.gamma = 1.5;
  CHECK_THROWS_AS(w.validate(), std::invalid_argument);
}

TEST_CASE("loss properties on random data") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::array<double, 3> z{n(rng), n(rng), n(rng)};
    const double r = n(rng);
    CHECK(rp_loss(z, r) >= 0.0);
    CHECK(rp_loss(z, r) == rp_loss(z, r * 37.0));
    // Softmax shift invariance.
    const std::array<double, 3> z2{z[0] + 3.0, z[1] + 3.0, z[2] + 3.0};
    CHECK(rp_loss(z2, r) == doctest::Approx(rp_loss(z, r)).epsilon(1e-12));

    std::vector<double> R(5), V(5);
    for (int i = 0; i < 5; ++i) R[static_cast<std::size_t>(i)] = n(rng), V[static_cast<std::size_t>(i)] = n(rng);
    CHECK(value_loss(R, V) >= 0.0);
    CHECK(value_loss(R, V) == value_loss(V, R));
  }
}
