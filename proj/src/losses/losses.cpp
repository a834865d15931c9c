#include "unrealdc/losses.hpp"

#include <algorithm>
#include <cmath>

namespace unrealdc::losses {

void LossWeights::validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must lie in [0,1]");
  if (!(gamma_pc >= 0.0 && gamma_pc <= 1.0)) throw std::invalid_argument("gamma_pc must lie in [0,1]");
  if (!(lambda_vr >= 0.0) || !(lambda_rp >= 0.0) || !(lambda_pc >= 0.0) || !(entropy_beta >= 0.0)) {
    throw std::invalid_argument("loss weights must be non-negative");
  }
}

void Rollout::validate() const {
  const std::size_t n = rewards.size();
  if (frames.size() != n || actions.size() != n || dones.size() != n) {
    throw std::invalid_argument("rollout: misaligned frames/actions/rewards/dones");
  }
  if (n > 0 && dones.back() && bootstrap) {
    throw std::invalid_argument("rollout: bootstrap present after a terminal step");
  }
}

namespace {

template <typename Dones>
std::vector<double> discounted_returns(std::span<const double> rewards, const Dones& dones,
                                       std::optional<double> bootstrap, double gamma) {
  std::vector<double> out(rewards.size());
  double running = bootstrap.value_or(0.0);
  for (std::size_t t = rewards.size(); t-- > 0;) {
    if (t < dones.size() && dones[t]) running = 0.0;
    running = rewards[t] + gamma * running;
    out[t] = running;
  }
  return out;
}

}  // namespace

std::vector<double> n_step_returns(std::span<const double> rewards, std::span<const bool> dones,
                                   std::optional<double> bootstrap, double gamma) {
  return discounted_returns(rewards, dones, bootstrap, gamma);
}

std::vector<double> n_step_returns(const Rollout& rollout, double gamma) {
  rollout.validate();
  return discounted_returns(rollout.rewards, rollout.dones, rollout.bootstrap, gamma);
}

double policy_loss(std::span<const double> returns, std::span<const double> values,
                   std::span<const double> log_probs) {
  double loss = 0.0;
  for (std::size_t t = 0; t < log_probs.size(); ++t) {
    if (!std::isfinite(log_probs[t])) throw std::domain_error("policy_loss: non-finite log-prob");
    loss += -(returns[t] - values[t]) * log_probs[t];
  }
  return loss;
}

double entropy(std::span<const double> probs) {
  double h = 0.0;
  for (const double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

double value_loss(std::span<const double> returns, std::span<const double> values) {
  double loss = 0.0;
  for (std::size_t t = 0; t < returns.size(); ++t) {
    const double d = returns[t] - values[t];
    loss += 0.5 * d * d;
  }
  return loss;
}

double vr_loss(const Rollout& replayed, double gamma, std::span<const double> fresh_values) {
  return value_loss(n_step_returns(replayed, gamma), fresh_values);
}

RewardClass reward_class(double reward) {
  if (reward == 0.0) return RewardClass::Zero;
  return reward > 0.0 ? RewardClass::Positive : RewardClass::Negative;
}

double rp_loss(std::span<const double, 3> logits, double reward) {
  const double mx = std::max({logits[0], logits[1], logits[2]});
  double sum = 0.0;
  for (const double z : logits) sum += std::exp(z - mx);
  const auto k = static_cast<std::size_t>(reward_class(reward));
  return -(logits[k] - mx - std::log(sum));
}

std::vector<double> pc_pseudo_reward(const Observation& a, const Observation& b, int regions_h,
                                     int regions_w) {
  if (a.height != b.height || a.width != b.width) {
    throw std::invalid_argument("pc_pseudo_reward: frames differ in shape");
  }
  if (regions_h <= 0 || regions_w <= 0 || a.height % regions_h != 0 || a.width % regions_w != 0) {
    throw std::invalid_argument("pc_pseudo_reward: " + std::to_string(a.height) + "x" +
                                std::to_string(a.width) + " frame does not divide into " +
                                std::to_string(regions_h) + "x" + std::to_string(regions_w) +
                                " regions");
  }
  const int rh = a.height / regions_h;
  const int rw = a.width / regions_w;
  std::vector<double> out(static_cast<std::size_t>(regions_h * regions_w), 0.0);
  for (int y = 0; y < a.height; ++y) {
    for (int x = 0; x < a.width; ++x) {
      const auto base = static_cast<std::size_t>((y * a.width + x) * 3);
      double d = 0.0;
      for (int ch = 0; ch < 3; ++ch) {
        d += std::abs(static_cast<double>(a.pixels[base + ch]) - static_cast<double>(b.pixels[base + ch]));
      }
      out[static_cast<std::size_t>((y / rh) * regions_w + x / rw)] += d;
    }
  }
  const double norm = 1.0 / (rh * rw * 3);
  for (auto& v : out) v *= norm;
  return out;
}

std::vector<std::vector<double>> pc_targets(std::span<const std::vector<double>> pseudo_rewards,
                                            std::span<const double> bootstrap_max_q,
                                            double gamma_pc) {
  std::vector<std::vector<double>> out(pseudo_rewards.size());
  std::vector<double> running(bootstrap_max_q.begin(), bootstrap_max_q.end());
  for (std::size_t t = pseudo_rewards.size(); t-- > 0;) {
    for (std::size_t r = 0; r < running.size(); ++r) {
      running[r] = pseudo_rewards[t][r] + gamma_pc * running[r];
    }
    out[t] = running;
  }
  return out;
}

double pc_loss(std::span<const std::vector<double>> targets,
               std::span<const std::vector<double>> q_taken) {
  double loss = 0.0;
  for (std::size_t t = 0; t < targets.size(); ++t) {
    for (std::size_t r = 0; r < targets[t].size(); ++r) {
      const double d = targets[t][r] - q_taken[t][r];
      loss += 0.5 * d * d;
    }
  }
  return loss;
}

double total_loss(const LossComponents& c, const LossWeights& w) {
  const std::pair<const char*, double> parts[] = {
      {"pi", c.pi}, {"v", c.v}, {"vr", c.vr}, {"rp", c.rp}, {"pc", c.pc}};
  for (const auto& [name, value] : parts) {
    if (!std::isfinite(value)) throw NonFiniteComponent(name);
  }
  return c.pi + c.v + w.lambda_vr * c.vr + w.lambda_rp * c.rp + w.lambda_pc * c.pc;
}

// ---------------------------------------------------------------------------

template <typename Real>
double policy_objective(std::span<const netcore::ForwardOutput<Real>> outputs,
                        std::span<const int> actions, std::span<const double> advantages,
                        double entropy_beta, std::span<netcore::OutputGrad<Real>> grads) {
  double loss = 0.0;
  for (std::size_t t = 0; t < advantages.size(); ++t) {
    const auto& logits = outputs[t].policy_logits;
    const std::size_t n = logits.size();
    double mx = static_cast<double>(logits[0]);
    for (const Real z : logits) mx = std::max(mx, static_cast<double>(z));
    double sum = 0.0;
    for (const Real z : logits) sum += std::exp(static_cast<double>(z) - mx);
    const double log_sum = std::log(sum) + mx;
    std::vector<double> logp(n), p(n);
    double h = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      logp[j] = static_cast<double>(logits[j]) - log_sum;
      p[j] = std::exp(logp[j]);
      h -= p[j] * logp[j];
    }
    const auto a = static_cast<std::size_t>(actions[t]);
    const double adv = advantages[t];
    loss += -adv * logp[a] - entropy_beta * h;

    auto& g = grads[t].policy_logits;
    g.assign(n, Real(0));
    for (std::size_t j = 0; j < n; ++j) {
      const double dlogp = (j == a ? 1.0 : 0.0) - p[j];
      // dH/dz_j = -p_j (log p_j + H)
      g[j] = static_cast<Real>(-adv * dlogp + entropy_beta * p[j] * (logp[j] + h));
    }
  }
  return loss;
}

template <typename Real>
double value_objective(std::span<const netcore::ForwardOutput<Real>> outputs,
                       std::span<const double> returns,
                       std::span<netcore::OutputGrad<Real>> grads) {
  double loss = 0.0;
  for (std::size_t t = 0; t < returns.size(); ++t) {
    const double v = static_cast<double>(outputs[t].value);
    const double d = returns[t] - v;
    loss += 0.5 * d * d;
    grads[t].value = static_cast<Real>(v - returns[t]);
  }
  return loss;
}

template <typename Real>
netcore::HeadLosses a3c_objective(std::span<const netcore::ForwardOutput<Real>> outputs,
                                  std::span<const int> actions, std::span<const double> returns,
                                  double entropy_beta,
                                  std::span<netcore::OutputGrad<Real>> grads) {
  std::vector<double> advantages(returns.size());
  for (std::size_t t = 0; t < returns.size(); ++t) {
    advantages[t] = returns[t] - static_cast<double>(outputs[t].value);
  }
  netcore::HeadLosses loss;
  loss.policy = policy_objective(outputs, actions, advantages, entropy_beta, grads);
  loss.value = value_objective(outputs, returns, grads);
  return loss;
}

template <typename Real>
double vr_objective(std::span<const netcore::ForwardOutput<Real>> outputs,
                    std::span<const double> rewards, std::span<const bool> dones, double gamma,
                    std::span<netcore::OutputGrad<Real>> grads) {
  const std::size_t n = outputs.size();
  if (n == 0) return 0.0;
  const bool terminal = dones[n - 1];
  const std::size_t steps = terminal ? n : n - 1;
  std::optional<double> bootstrap;
  if (!terminal) bootstrap = static_cast<double>(outputs[n - 1].value);
  const auto returns = n_step_returns(rewards.first(steps), dones.first(steps), bootstrap, gamma);
  return value_objective(outputs, std::span<const double>(returns), grads);
}

template <typename Real>
std::vector<std::vector<double>> pc_window_targets(
    std::span<const netcore::ForwardOutput<Real>> outputs, std::span<const Observation> frames,
    const netcore::NetworkConfig& config, double gamma_pc) {
  const std::size_t n = outputs.size();
  if (n < 2) return {};
  const auto regions = static_cast<std::size_t>(config.pc_height * config.pc_width);
  const auto a_count = static_cast<std::size_t>(config.action_count);
  std::vector<std::vector<double>> pseudo(n - 1);
  for (std::size_t t = 0; t + 1 < n; ++t) {
    pseudo[t] = pc_pseudo_reward(frames[t], frames[t + 1], config.pc_height, config.pc_width);
  }
  std::vector<double> boot(regions);
  for (std::size_t r = 0; r < regions; ++r) {
    const Real* q = outputs[n - 1].pc_q.data() + r * a_count;
    boot[r] = static_cast<double>(*std::max_element(q, q + a_count));
  }
  return pc_targets(pseudo, boot, gamma_pc);
}

template <typename Real>
double pc_objective_fixed(std::span<const netcore::ForwardOutput<Real>> outputs,
                          std::span<const int> actions,
                          std::span<const std::vector<double>> targets,
                          const netcore::NetworkConfig& config,
                          std::span<netcore::OutputGrad<Real>> grads) {
  const auto regions = static_cast<std::size_t>(config.pc_height * config.pc_width);
  const auto a_count = static_cast<std::size_t>(config.action_count);
  double loss = 0.0;
  for (std::size_t t = 0; t < targets.size(); ++t) {
    const auto a = static_cast<std::size_t>(actions[t]);
    auto& g = grads[t];
    g.pc_q.assign(outputs[t].pc_q.size(), Real(0));
    for (std::size_t r = 0; r < regions; ++r) {
      const double q = static_cast<double>(outputs[t].pc_q[r * a_count + a]);
      const double d = targets[t][r] - q;
      loss += 0.5 * d * d;
      g.pc_q[r * a_count + a] = static_cast<Real>(q - targets[t][r]);
    }
  }
  return loss;
}

template <typename Real>
double pc_objective(std::span<const netcore::ForwardOutput<Real>> outputs,
                    std::span<const Observation> frames, std::span<const int> actions,
                    const netcore::NetworkConfig& config, double gamma_pc,
                    std::span<netcore::OutputGrad<Real>> grads) {
  const auto targets = pc_window_targets(outputs, frames, config, gamma_pc);
  return pc_objective_fixed(outputs, actions, std::span<const std::vector<double>>(targets),
                            config, grads);
}

template <typename Real>
double rp_objective(const netcore::ForwardOutput<Real>& output, double reward,
                    netcore::OutputGrad<Real>& grad) {
  std::array<double, 3> z{};
  for (std::size_t i = 0; i < 3; ++i) z[i] = static_cast<double>(output.rp_logits[i]);
  const double mx = std::max({z[0], z[1], z[2]});
  double sum = 0.0;
  for (const double v : z) sum += std::exp(v - mx);
  const auto k = static_cast<std::size_t>(reward_class(reward));
  for (std::size_t i = 0; i < 3; ++i) {
    const double p = std::exp(z[i] - mx) / sum;
    grad.rp_logits[i] = static_cast<Real>(p - (i == k ? 1.0 : 0.0));
  }
  return rp_loss(std::span<const double, 3>(z), reward);
}

template <typename Real>
void scale_output_grads(std::span<netcore::OutputGrad<Real>> grads, double factor) {
  const auto f = static_cast<Real>(factor);
  for (auto& g : grads) {
    for (auto& v : g.policy_logits) v *= f;
    g.value *= f;
    for (auto& v : g.rp_logits) v *= f;
    for (auto& v : g.pc_q) v *= f;
  }
}

#define UNREALDC_INSTANTIATE(Real)                                                              \
  template double policy_objective<Real>(std::span<const netcore::ForwardOutput<Real>>,         \
                                         std::span<const int>, std::span<const double>, double, \
                                         std::span<netcore::OutputGrad<Real>>);                 \
  template double value_objective<Real>(std::span<const netcore::ForwardOutput<Real>>,          \
                                        std::span<const double>,                                \
                                        std::span<netcore::OutputGrad<Real>>);                  \
  template std::vector<std::vector<double>> pc_window_targets<Real>(                            \
      std::span<const netcore::ForwardOutput<Real>>, std::span<const Observation>,              \
      const netcore::NetworkConfig&, double);                                                   \
  template double pc_objective_fixed<Real>(std::span<const netcore::ForwardOutput<Real>>,       \
                                           std::span<const int>,                                \
                                           std::span<const std::vector<double>>,                \
                                           const netcore::NetworkConfig&,                       \
                                           std::span<netcore::OutputGrad<Real>>);               \
  template netcore::HeadLosses a3c_objective<Real>(                                             \
      std::span<const netcore::ForwardOutput<Real>>, std::span<const int>,                      \
      std::span<const double>, double, std::span<netcore::OutputGrad<Real>>);                   \
  template double vr_objective<Real>(std::span<const netcore::ForwardOutput<Real>>,             \
                                     std::span<const double>, std::span<const bool>, double,    \
                                     std::span<netcore::OutputGrad<Real>>);                     \
  template double pc_objective<Real>(std::span<const netcore::ForwardOutput<Real>>,             \
                                     std::span<const Observation>, std::span<const int>,        \
                                     const netcore::NetworkConfig&, double,                     \
                                     std::span<netcore::OutputGrad<Real>>);                     \
  template double rp_objective<Real>(const netcore::ForwardOutput<Real>&, double,               \
                                     netcore::OutputGrad<Real>&);                               \
  template void scale_output_grads<Real>(std::span<netcore::OutputGrad<Real>>, double);

UNREALDC_INSTANTIATE(float)
UNREALDC_INSTANTIATE(double)
#undef UNREALDC_INSTANTIATE

}  // namespace unrealdc::losses
