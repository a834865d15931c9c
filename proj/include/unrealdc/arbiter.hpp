#pragma once

// Agents that act in MiniDoom from a network checkpoint, and the combined
// agent that hands control to the action or navigation network depending on
// the navigation network's reward-sign prediction.

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>

#include "unrealdc/losses.hpp"
#include "unrealdc/minidoom.hpp"
#include "unrealdc/netcore.hpp"

namespace unrealdc::arbiter {

using minidoom::EnvAction;
using minidoom::Observation;

enum class AgentChoice { Action, Navigation };
std::string_view to_string(AgentChoice c);

struct Routing {
  AgentChoice choice = AgentChoice::Navigation;
  losses::RewardClass rp_class = losses::RewardClass::Zero;
  bool operator==(const Routing&) const = default;
};

struct RouterOptions {
  /// When set, route to Action iff P(zero) < threshold instead of using argmax.
  std::optional<double> zero_threshold;
  /// Route to Action only for a negative prediction.
  bool action_only_on_negative = false;
};

/// Argmax over (zero, positive, negative); ties involving zero resolve to
/// zero. Throws std::invalid_argument on non-finite logits.
Routing route(std::span<const double, 3> logits, const RouterOptions& options = {});

enum class ActMode { Sample, Greedy };

struct Decision {
  EnvAction action = EnvAction::MoveForward;
  std::optional<Routing> routing;  // set by the combined agent only
};

class Agent {
 public:
  virtual ~Agent() = default;
  /// Resets recurrent state and reseeds action sampling.
  virtual void begin_episode(std::uint64_t seed) = 0;
  virtual Decision act(const Observation& obs) = 0;
  virtual std::unique_ptr<Agent> clone() const = 0;
  virtual std::string name() const = 0;
};

class AgentMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// One network: 5 outputs drive the full action set, 3 the navigation set.
class PolicyAgent : public Agent {
 public:
  PolicyAgent(netcore::Parameters<float> params, ActMode mode, std::string name = "policy");

  void begin_episode(std::uint64_t seed) override;
  Decision act(const Observation& obs) override;
  std::unique_ptr<Agent> clone() const override;
  std::string name() const override { return name_; }
  const netcore::RecurrentState<float>& state() const { return state_; }

 private:
  std::shared_ptr<const netcore::Parameters<float>> params_;
  netcore::Network<float> net_;
  ActMode mode_;
  std::string name_;
  netcore::RecurrentState<float> state_;
  std::mt19937_64 rng_;
};

class CombinedAgent : public Agent {
 public:
  /// Replaces the navigation network's RP logits; receives the step index
  /// within the episode and the real logits.
  using RpOverride = std::function<std::array<double, 3>(std::size_t, std::span<const double, 3>)>;

  /// Throws AgentMismatch unless the action network has 5 outputs, the
  /// navigation network 3, and both take the same input dims.
  CombinedAgent(netcore::Parameters<float> action, netcore::Parameters<float> navigation,
                ActMode mode, RouterOptions options = {}, std::string name = "combined");

  void begin_episode(std::uint64_t seed) override;
  Decision act(const Observation& obs) override;
  std::unique_ptr<Agent> clone() const override;
  std::string name() const override { return name_; }

  void set_rp_override(RpOverride f) { override_ = std::move(f); }
  const netcore::RecurrentState<float>& action_state() const { return action_state_; }
  const netcore::RecurrentState<float>& navigation_state() const { return nav_state_; }

 private:
  std::shared_ptr<const netcore::Parameters<float>> action_params_;
  std::shared_ptr<const netcore::Parameters<float>> nav_params_;
  netcore::Network<float> action_net_;
  netcore::Network<float> nav_net_;
  ActMode mode_;
  RouterOptions options_;
  std::string name_;
  RpOverride override_;
  netcore::RecurrentState<float> action_state_;
  netcore::RecurrentState<float> nav_state_;
  std::size_t step_ = 0;
  std::mt19937_64 rng_;
};

/// Index into the policy: argmax (lowest index on ties) or a draw from rng.
int choose(std::span<const float> policy, ActMode mode, std::mt19937_64& rng);

}  // namespace unrealdc::arbiter
