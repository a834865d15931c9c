#pragma once

// Asynchronous actor-critic training with auxiliary tasks: a global parameter
// store shared by worker threads, each running its own environment and
// replay buffer and applying gradients through a shared RMSProp.

#include <array>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "unrealdc/losses.hpp"
#include "unrealdc/minidoom.hpp"
#include "unrealdc/netcore.hpp"

namespace unrealdc::trainer {

enum class AgentRole { Action, Navigation };
enum class Precision { Float, Double };

std::string_view to_string(AgentRole r);
std::optional<AgentRole> parse_role(std::string_view s);

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  AgentRole role = AgentRole::Navigation;
  int workers = 4;
  int rollout_length = 20;
  std::int64_t total_steps = 500'000;
  double learning_rate = 7e-4;
  bool lr_linear_decay = true;
  double rmsprop_decay = 0.99;
  double rmsprop_epsilon = 0.1;
  double grad_clip_norm = 40.0;  // 0 disables
  losses::LossWeights loss;
  std::vector<std::filesystem::path> maps;  // worker i uses maps[i % size]
  minidoom::EnvConfig env;
  std::string network_profile = "small";
  Precision precision = Precision::Float;
  std::size_t replay_capacity = 2000;
  std::size_t rp_batch = 2;
  std::uint64_t seed = 1;
  std::int64_t checkpoint_interval = 0;  // global steps; 0 writes only the final checkpoint

  static TrainConfig full_defaults();

  int action_count() const { return role == AgentRole::Action ? 5 : 3; }
  minidoom::RewardProfile reward_profile() const;
  std::span<const minidoom::EnvAction> action_set() const;
  netcore::NetworkConfig network_config() const;
  /// Environment config with observation dims matched to the network input.
  minidoom::EnvConfig env_config() const;
  /// Throws ConfigError on the first invalid field.
  void validate() const;
};

/// Reads an INI file with [train], [loss], [env] sections. Unknown keys are
/// errors. Relative map paths resolve against the file's directory.
TrainConfig load_train_config(const std::filesystem::path& path);
/// Applies one "section.key=value" style override (section optional for
/// [train] keys).
void apply_override(TrainConfig& config, std::string_view key, std::string_view value);
/// INI text covering every field; load_train_config round-trips it.
std::string to_ini(const TrainConfig& config);

// ---------------------------------------------------------------------------
// RMSProp

struct RmsPropSettings {
  double learning_rate = 7e-4;
  double decay = 0.99;
  double epsilon = 0.1;
};

/// g <- decay g + (1-decay) grad^2; param <- param - lr grad / sqrt(g + eps).
template <typename Real>
void rmsprop_apply(std::span<Real> params, std::span<const Real> grads, std::span<Real> g,
                   const RmsPropSettings& s);

/// Scales grads so their global L2 norm is at most max_norm. Returns the norm before scaling.
template <typename Real>
double clip_global_norm(std::span<Real> grads, double max_norm);

/// Global parameters plus the shared squared-gradient statistic. Reads and
/// applies lock one parameter block at a time, so a reader may see blocks from
/// different updates but never a half-written block.
template <typename Real>
class SharedStore {
 public:
  explicit SharedStore(netcore::Parameters<Real> initial);

  void read(netcore::Parameters<Real>& out) const;
  netcore::Parameters<Real> params() const;
  netcore::Parameters<Real> statistics() const;

  /// Skips (and counts) the update when any gradient is non-finite.
  /// Returns whether the update was applied.
  bool apply(const netcore::Parameters<Real>& grads, const RmsPropSettings& s);

  std::int64_t applied_updates() const { return applied_.load(); }
  std::int64_t skipped_updates() const { return skipped_.load(); }

 private:
  netcore::Parameters<Real> params_;
  netcore::Parameters<Real> g_;
  const netcore::ParamLayout* layout_;
  mutable std::array<std::mutex, netcore::kBlockCount> locks_;
  std::atomic<std::int64_t> applied_{0};
  std::atomic<std::int64_t> skipped_{0};
};

extern template class SharedStore<float>;
extern template class SharedStore<double>;

// ---------------------------------------------------------------------------
// Training

struct LogRow {
  std::int64_t global_step = 0;
  int worker = 0;
  std::int64_t episode = 0;
  int kills = 0;
  int deaths = 0;
  int objects = 0;
  double reward = 0.0;
  losses::LossComponents loss;  // last update of the episode
};

inline constexpr std::string_view kLogHeader =
    "global_step,worker,episode,kills,deaths,objects,reward,loss_pi,loss_v,loss_vr,loss_rp,loss_pc";
std::string format_log_row(const LogRow& row);

struct UpdateRecord {
  int worker = 0;
  std::int64_t worker_update = 0;  // 1-based
  std::int64_t global_step = 0;
  losses::LossComponents loss;
  bool vr_active = false;
  bool rp_active = false;
  bool pc_active = false;
  bool applied = false;
  double grad_norm = 0.0;
};

struct TrainHooks {
  std::optional<std::filesystem::path> log_path;        // CSV training log
  std::optional<std::filesystem::path> checkpoint_dir;  // ckpt_<step>.bin and final.bin
  /// Called from worker threads after every update attempt.
  std::function<void(const UpdateRecord&)> on_update;
  /// Stops after this many updates per worker, in addition to the step budget.
  std::optional<std::int64_t> max_updates_per_worker;
};

struct WorkerSummary {
  std::int64_t steps = 0;
  std::int64_t updates = 0;
  std::int64_t episodes = 0;
  std::string error;  // empty unless the worker aborted
};

struct TrainResult {
  netcore::Parameters<float> params;
  std::int64_t global_steps = 0;
  std::int64_t applied_updates = 0;
  std::int64_t skipped_updates = 0;
  std::vector<WorkerSummary> workers;
  std::vector<LogRow> log;  // sorted by global step
};

class TrainingAborted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Runs workers until the global step budget is spent. Throws ConfigError
/// for invalid configs or maps and TrainingAborted on checkpoint I/O failure
/// (the log written so far is kept).
TrainResult train(const TrainConfig& config, const TrainHooks& hooks = {},
                  const std::optional<netcore::Parameters<float>>& initial = std::nullopt);

/// Per-window kill-death and object-death ratios over the log, for plotting.
struct CurvePoint {
  std::int64_t global_step = 0;
  double kill_death = 0.0;
  double object_death = 0.0;
};
std::vector<CurvePoint> ratio_curve(std::span<const LogRow> log, std::size_t window);

}  // namespace unrealdc::trainer
