#include "unrealdc/arbiter.hpp"

#include <algorithm>
#include <cmath>

namespace unrealdc::arbiter {

using losses::RewardClass;

std::string_view to_string(AgentChoice c) {
  return c == AgentChoice::Action ? "action" : "navigation";
}

Routing route(std::span<const double, 3> logits, const RouterOptions& options) {
  for (const double z : logits) {
    if (!std::isfinite(z)) throw std::invalid_argument("route: non-finite reward-prediction logit");
  }
  RewardClass cls = RewardClass::Zero;
  if (options.zero_threshold) {
    const double mx = std::max({logits[0], logits[1], logits[2]});
    double sum = 0.0;
    for (const double z : logits) sum += std::exp(z - mx);
    const double p_zero = std::exp(logits[0] - mx) / sum;
    if (p_zero < *options.zero_threshold) {
      cls = logits[2] > logits[1] ? RewardClass::Negative : RewardClass::Positive;
    }
  } else if (logits[1] > logits[0] || logits[2] > logits[0]) {
    cls = logits[2] > logits[1] ? RewardClass::Negative : RewardClass::Positive;
  }
  Routing r;
  r.rp_class = cls;
  const bool act = options.action_only_on_negative ? cls == RewardClass::Negative
                                                   : cls != RewardClass::Zero;
  r.choice = act ? AgentChoice::Action : AgentChoice::Navigation;
  return r;
}

int choose(std::span<const float> policy, ActMode mode, std::mt19937_64& rng) {
  if (mode == ActMode::Greedy) {
    return static_cast<int>(std::max_element(policy.begin(), policy.end()) - policy.begin());
  }
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < policy.size(); ++i) {
    acc += static_cast<double>(policy[i]);
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(policy.size()) - 1;
}

namespace {

EnvAction map_action(int index, int action_count) {
  const auto i = static_cast<std::size_t>(index);
  return action_count == 5 ? minidoom::kActionAgentActions[i] : minidoom::kNavigationAgentActions[i];
}

void check_action_count(const netcore::NetworkConfig& c) {
  if (c.action_count != 5 && c.action_count != 3) {
    throw AgentMismatch("network has " + std::to_string(c.action_count) +
                        " actions; expected 5 (action) or 3 (navigation)");
  }
}

}  // namespace

PolicyAgent::PolicyAgent(netcore::Parameters<float> params, ActMode mode, std::string name)
    : params_(std::make_shared<const netcore::Parameters<float>>(std::move(params))),
      net_(params_->config),
      mode_(mode),
      name_(std::move(name)),
      state_(netcore::RecurrentState<float>::zero(params_->config)) {
  check_action_count(params_->config);
}

void PolicyAgent::begin_episode(std::uint64_t seed) {
  state_ = netcore::RecurrentState<float>::zero(params_->config);
  rng_.seed(seed);
}

Decision PolicyAgent::act(const Observation& obs) {
  auto tr = net_.forward(*params_, std::span<const Observation>(&obs, 1), state_,
                         netcore::kPolicyValue);
  state_ = std::move(tr.final_state);
  const int a = choose(tr.outputs[0].policy, mode_, rng_);
  return {map_action(a, params_->config.action_count), std::nullopt};
}

std::unique_ptr<Agent> PolicyAgent::clone() const { return std::make_unique<PolicyAgent>(*this); }

CombinedAgent::CombinedAgent(netcore::Parameters<float> action, netcore::Parameters<float> navigation,
                             ActMode mode, RouterOptions options, std::string name)
    : action_params_(std::make_shared<const netcore::Parameters<float>>(std::move(action))),
      nav_params_(std::make_shared<const netcore::Parameters<float>>(std::move(navigation))),
      action_net_(action_params_->config),
      nav_net_(nav_params_->config),
      mode_(mode),
      options_(options),
      name_(std::move(name)) {
  const auto& a = action_params_->config;
  const auto& n = nav_params_->config;
  if (a.action_count != 5) {
    throw AgentMismatch("action checkpoint has " + std::to_string(a.action_count) +
                        " actions; expected 5");
  }
  if (n.action_count != 3) {
    throw AgentMismatch("navigation checkpoint has " + std::to_string(n.action_count) +
                        " actions; expected 3");
  }
  if (a.input_height != n.input_height || a.input_width != n.input_width) {
    throw AgentMismatch("action and navigation networks take different input dims");
  }
  action_state_ = netcore::RecurrentState<float>::zero(a);
  nav_state_ = netcore::RecurrentState<float>::zero(n);
}

void CombinedAgent::begin_episode(std::uint64_t seed) {
  action_state_ = netcore::RecurrentState<float>::zero(action_params_->config);
  nav_state_ = netcore::RecurrentState<float>::zero(nav_params_->config);
  step_ = 0;
  rng_.seed(seed);
}

Decision CombinedAgent::act(const Observation& obs) {
  const std::span<const Observation> one(&obs, 1);
  auto at = action_net_.forward(*action_params_, one, action_state_, netcore::kPolicyValue);
  auto nt = nav_net_.forward(*nav_params_, one, nav_state_,
                             netcore::kPolicyValue | netcore::kRewardPrediction);
  action_state_ = std::move(at.final_state);
  nav_state_ = std::move(nt.final_state);

  std::array<double, 3> logits{};
  for (std::size_t i = 0; i < 3; ++i) logits[i] = static_cast<double>(nt.outputs[0].rp_logits[i]);
  if (override_) logits = override_(step_, std::span<const double, 3>(logits));
  ++step_;

  Decision d;
  d.routing = route(std::span<const double, 3>(logits), options_);
  if (d.routing->choice == AgentChoice::Action) {
    d.action = map_action(choose(at.outputs[0].policy, mode_, rng_), 5);
  } else {
    d.action = map_action(choose(nt.outputs[0].policy, mode_, rng_), 3);
  }
  return d;
}

std::unique_ptr<Agent> CombinedAgent::clone() const {
  return std::make_unique<CombinedAgent>(*this);
}

}  // namespace unrealdc::arbiter
