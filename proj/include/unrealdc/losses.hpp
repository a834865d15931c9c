#pragma once

// Loss terms for the actor-critic and its three auxiliary tasks, plus the
// glue that turns network outputs into loss values and output gradients.

#include <array>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "unrealdc/minidoom.hpp"
#include "unrealdc/netcore.hpp"

namespace unrealdc::losses {

using minidoom::Observation;

struct LossWeights {
  double gamma = 0.99;
  double lambda_vr = 1.0;
  double lambda_rp = 1.0;
  double lambda_pc = 0.05;
  double gamma_pc = 0.9;
  double entropy_beta = 0.01;  // 0 gives the plain policy-gradient loss

  /// Throws std::invalid_argument unless gamma, gamma_pc in [0,1] and all weights >= 0.
  void validate() const;
};

/// n consecutive steps: frames[t] was observed, actions[t] taken, rewards[t]
/// received, dones[t] set if the episode ended with that step.
struct Rollout {
  std::vector<Observation> frames;
  std::vector<int> actions;
  std::vector<double> rewards;
  std::vector<bool> dones;
  std::optional<double> bootstrap;  // V(s_n); absent when the last step is terminal

  std::size_t size() const { return rewards.size(); }
  /// Throws std::invalid_argument on misaligned lengths or a bootstrap after a terminal step.
  void validate() const;
};

/// R_t = r_t + gamma * R_{t+1}, seeded with the bootstrap (0 if absent); a done
/// step restarts the recursion from 0.
std::vector<double> n_step_returns(std::span<const double> rewards, std::span<const bool> dones,
                                   std::optional<double> bootstrap, double gamma);
std::vector<double> n_step_returns(const Rollout& rollout, double gamma);

/// Sum_t -(R_t - V_t) log pi(a_t|s_t). Throws std::domain_error on a non-finite log-prob.
double policy_loss(std::span<const double> returns, std::span<const double> values,
                   std::span<const double> log_probs);
double entropy(std::span<const double> probs);
/// Sum_t 1/2 (R_t - V_t)^2.
double value_loss(std::span<const double> returns, std::span<const double> values);
/// Value loss on replayed data: returns from the replayed rewards, bootstrapped
/// with `bootstrap` unless the replayed window ends in a terminal step.
double vr_loss(const Rollout& replayed, double gamma, std::span<const double> fresh_values);

enum class RewardClass : int { Zero = 0, Positive = 1, Negative = 2 };
RewardClass reward_class(double reward);
/// Cross-entropy of softmax(logits) against the class of sign(reward).
double rp_loss(std::span<const double, 3> logits, double reward);

/// Mean absolute difference per region (averaged over pixels and channels),
/// regions_h x regions_w row-major. Throws std::invalid_argument when the
/// frame dims do not split evenly or the frames differ in shape.
std::vector<double> pc_pseudo_reward(const Observation& a, const Observation& b, int regions_h,
                                     int regions_w);
/// n-step Q targets per step and region: target_t = pr_t + gamma * target_{t+1},
/// seeded with the bootstrap max-Q map.
std::vector<std::vector<double>> pc_targets(std::span<const std::vector<double>> pseudo_rewards,
                                            std::span<const double> bootstrap_max_q,
                                            double gamma_pc);
/// Sum over steps and regions of 1/2 (target - Q(region, a_t))^2.
double pc_loss(std::span<const std::vector<double>> targets,
               std::span<const std::vector<double>> q_taken);

struct LossComponents {
  double pi = 0.0;
  double v = 0.0;
  double vr = 0.0;
  double rp = 0.0;
  double pc = 0.0;
};

class NonFiniteComponent : public std::runtime_error {
 public:
  explicit NonFiniteComponent(const std::string& name)
      : std::runtime_error("non-finite loss component: " + name), name_(name) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

/// L = L_pi + L_v + lambda_vr L_vr + lambda_rp L_rp + lambda_pc L_pc.
double total_loss(const LossComponents& c, const LossWeights& w);

// ---------------------------------------------------------------------------
// Network objectives. Each returns the component value and writes its exact
// gradient with respect to the network outputs; callers scale by lambda.

/// Sum_t -A_t log pi(a_t|s_t) - beta H(pi(.|s_t)) with the advantages held
/// constant.
template <typename Real>
double policy_objective(std::span<const netcore::ForwardOutput<Real>> outputs,
                        std::span<const int> actions, std::span<const double> advantages,
                        double entropy_beta, std::span<netcore::OutputGrad<Real>> grads);

/// Sum_t 1/2 (R_t - V_t)^2 over the first returns.size() outputs, returns constant.
template <typename Real>
double value_objective(std::span<const netcore::ForwardOutput<Real>> outputs,
                       std::span<const double> returns,
                       std::span<netcore::OutputGrad<Real>> grads);

/// Actor-critic on a fresh rollout. outputs[t] must carry policy and value.
/// Advantages and returns are constants.
template <typename Real>
netcore::HeadLosses a3c_objective(std::span<const netcore::ForwardOutput<Real>> outputs,
                                  std::span<const int> actions, std::span<const double> returns,
                                  double entropy_beta,
                                  std::span<netcore::OutputGrad<Real>> grads);

/// Value replay over a replayed window forwarded from a zero recurrent state.
/// Steps used: all of them if the window ends terminal (bootstrap 0), else all
/// but the last, whose value is the (constant) bootstrap.
template <typename Real>
double vr_objective(std::span<const netcore::ForwardOutput<Real>> outputs,
                    std::span<const double> rewards, std::span<const bool> dones, double gamma,
                    std::span<netcore::OutputGrad<Real>> grads);

/// Pixel control over the same replayed window: steps 0..n-2 with pseudo
/// rewards from consecutive frames, bootstrapped by max_a Q at frame n-1.
template <typename Real>
double pc_objective(std::span<const netcore::ForwardOutput<Real>> outputs,
                    std::span<const Observation> frames, std::span<const int> actions,
                    const netcore::NetworkConfig& config, double gamma_pc,
                    std::span<netcore::OutputGrad<Real>> grads);

/// The n-step Q targets pc_objective regresses towards.
template <typename Real>
std::vector<std::vector<double>> pc_window_targets(
    std::span<const netcore::ForwardOutput<Real>> outputs, std::span<const Observation> frames,
    const netcore::NetworkConfig& config, double gamma_pc);

/// Pixel-control regression towards precomputed targets (one per step).
template <typename Real>
double pc_objective_fixed(std::span<const netcore::ForwardOutput<Real>> outputs,
                          std::span<const int> actions,
                          std::span<const std::vector<double>> targets,
                          const netcore::NetworkConfig& config,
                          std::span<netcore::OutputGrad<Real>> grads);

/// Reward-sign classification for a single output.
template <typename Real>
double rp_objective(const netcore::ForwardOutput<Real>& output, double reward,
                    netcore::OutputGrad<Real>& grad);

template <typename Real>
void scale_output_grads(std::span<netcore::OutputGrad<Real>> grads, double factor);

}  // namespace unrealdc::losses
