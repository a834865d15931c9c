#pragma once

// Recurrent convolutional actor-critic with reward-prediction and
// pixel-control heads, with a hand-written backward pass.
//
//   frame -> conv1+ReLU -> conv2+ReLU -> fc+ReLU -> LSTM -> policy (softmax)
//                                                        -> value (linear)
//                                                        -> fc+ReLU -> deconv -> Q map
//   conv2 features of the last three frames -> linear -> reward-sign logits

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "unrealdc/minidoom.hpp"

namespace unrealdc::netcore {

using minidoom::Observation;

struct ConvSpec {
  int filters = 0;
  int kernel = 0;
  int stride = 1;
  bool operator==(const ConvSpec&) const = default;
};

struct NetworkConfig {
  int input_height = 84;
  int input_width = 84;
  int input_channels = 3;
  ConvSpec conv1{16, 8, 4};
  ConvSpec conv2{32, 4, 2};
  int fc_size = 256;
  int recurrent_size = 256;
  int unroll_length = 20;
  int action_count = 5;
  // Pixel-control head: fc -> (pc_channels, pre_h, pre_w) -> deconv -> (pc_height, pc_width, actions)
  int pc_height = 7;
  int pc_width = 7;
  int pc_channels = 32;
  int pc_kernel = 3;
  int pc_stride = 2;

  /// 84x84 input, 16 8x8 / 32 4x4 convs, 256 fc, 256 LSTM unrolled 20 steps.
  static NetworkConfig full(int actions);
  /// Desk-scale profile used for training runs on a laptop CPU.
  static NetworkConfig small(int actions);
  /// 8x8 input, two filters per conv, fc and LSTM of 8. For gradient checks.
  static NetworkConfig tiny(int actions);
  static NetworkConfig from_profile(std::string_view profile, int actions);

  int conv1_height() const { return (input_height - conv1.kernel) / conv1.stride + 1; }
  int conv1_width() const { return (input_width - conv1.kernel) / conv1.stride + 1; }
  int conv2_height() const { return (conv1_height() - conv2.kernel) / conv2.stride + 1; }
  int conv2_width() const { return (conv1_width() - conv2.kernel) / conv2.stride + 1; }
  int conv2_size() const { return conv2_height() * conv2_width() * conv2.filters; }
  int pc_pre_height() const { return (pc_height - pc_kernel) / pc_stride + 1; }
  int pc_pre_width() const { return (pc_width - pc_kernel) / pc_stride + 1; }
  int pc_pre_size() const { return pc_pre_height() * pc_pre_width() * pc_channels; }
  int pc_size() const { return pc_height * pc_width * action_count; }

  /// Throws std::invalid_argument describing the first inconsistency.
  void validate() const;
  /// Canonical "key=value" lines; the fingerprint hashes this text.
  std::string canonical() const;
  std::uint64_t fingerprint() const;
  bool operator==(const NetworkConfig&) const = default;
};

NetworkConfig parse_canonical(std::string_view text);

enum class Block : std::size_t {
  Conv1W, Conv1B, Conv2W, Conv2B, FcW, FcB, LstmWx, LstmWh, LstmB, PolicyW, PolicyB,
  ValueW, ValueB, RpW, RpB, PcFcW, PcFcB, PcDeconvW, PcDeconvB,
};
inline constexpr std::size_t kBlockCount = 19;

struct BlockInfo {
  std::string name;
  std::vector<int> shape;
  std::size_t offset = 0;
  std::size_t size = 0;
};

struct ParamLayout {
  NetworkConfig config;
  std::array<BlockInfo, kBlockCount> blocks;
  std::size_t total = 0;

  explicit ParamLayout(const NetworkConfig& config);
  const BlockInfo& operator[](Block b) const { return blocks[static_cast<std::size_t>(b)]; }
};

/// Flat storage of every weight and bias, addressable per named block. Also
/// used for gradients and optimizer statistics, which share the shape.
template <typename Real>
struct Parameters {
  NetworkConfig config;
  std::vector<Real> values;

  Parameters() = default;
  explicit Parameters(const NetworkConfig& cfg);

  std::span<Real> block(Block b);
  std::span<const Real> block(Block b) const;
  std::size_t size() const { return values.size(); }
  void fill(Real v) { std::fill(values.begin(), values.end(), v); }
  bool all_finite() const;
  bool operator==(const Parameters&) const = default;

  template <typename Other>
  Parameters<Other> cast() const {
    Parameters<Other> out;
    out.config = config;
    out.values.assign(values.begin(), values.end());
    return out;
  }
};

const ParamLayout& layout_for(const NetworkConfig& config);

/// Carried across forward calls: LSTM hidden/cell plus up to two earlier
/// frames for the reward-prediction window (missing frames are zeros).
template <typename Real>
struct RecurrentState {
  std::vector<Real> hidden;
  std::vector<Real> cell;
  std::vector<Observation> history;  // oldest first, at most 2

  static RecurrentState zero(const NetworkConfig& config);
  bool operator==(const RecurrentState&) const = default;
};

enum HeadMask : unsigned {
  kPolicyValue = 1U,
  kRewardPrediction = 2U,
  kPixelControl = 4U,
  kAllHeads = 7U,
};

template <typename Real>
struct ForwardOutput {
  std::vector<Real> policy_logits;
  std::vector<Real> policy;  // softmax of policy_logits
  Real value = 0;
  std::array<Real, 3> rp_logits{};  // classes: zero, positive, negative
  std::vector<Real> pc_q;           // pc_height x pc_width x action_count
};

template <typename Real>
struct OutputGrad {
  std::vector<Real> policy_logits;  // empty means zero
  Real value = 0;
  std::array<Real, 3> rp_logits{};
  std::vector<Real> pc_q;  // empty means zero
};

/// Activations kept for the backward pass.
template <typename Real>
struct ForwardTrace {
  std::vector<ForwardOutput<Real>> outputs;
  RecurrentState<Real> final_state;

  unsigned heads = kAllHeads;
  std::size_t history_frames = 0;  // frames prepended from the carried state
  std::vector<std::vector<Real>> input;      // per frame incl. history
  std::vector<std::vector<Real>> conv1;      // post-ReLU
  std::vector<std::vector<Real>> conv2;      // post-ReLU
  std::vector<std::vector<Real>> fc;         // post-ReLU, per step
  std::vector<std::vector<Real>> gates;      // i,f,g,o post-activation, per step
  std::vector<std::vector<Real>> cell;       // c_t per step
  std::vector<std::vector<Real>> hidden;     // h_t per step
  std::vector<std::vector<Real>> pc_hidden;  // post-ReLU, per step
  std::vector<Real> initial_hidden;
  std::vector<Real> initial_cell;
};

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NonFiniteLoss : public std::runtime_error {
 public:
  explicit NonFiniteLoss(std::string head);
  const std::string& head() const { return head_; }

 private:
  std::string head_;
};

/// Per-head loss values reported by a loss function.
struct HeadLosses {
  double policy = 0.0;
  double value = 0.0;
  double rp = 0.0;
  double pc = 0.0;
  double sum() const { return policy + value + rp + pc; }
};

/// Evaluates a scalar loss over the outputs and writes dLoss/dOutput into
/// `grads` (same length as outputs).
template <typename Real>
using LossFn = std::function<HeadLosses(std::span<const ForwardOutput<Real>>,
                                        std::span<OutputGrad<Real>>)>;

template <typename Real>
struct GradientResult {
  HeadLosses loss;
  Parameters<Real> grads;
  ForwardTrace<Real> trace;
};

template <typename Real>
class Network {
 public:
  explicit Network(NetworkConfig config);

  const NetworkConfig& config() const { return config_; }

  /// Fan-in scaled uniform weights, zero biases. Deterministic in `seed`.
  Parameters<Real> init_params(std::uint64_t seed) const;

  ForwardTrace<Real> forward(const Parameters<Real>& params, std::span<const Observation> frames,
                             const RecurrentState<Real>& state, unsigned heads = kAllHeads) const;

  /// Accumulates parameter gradients into `grads`. No gradient flows into
  /// the initial recurrent state.
  void backward(const Parameters<Real>& params, const ForwardTrace<Real>& trace,
                std::span<const OutputGrad<Real>> output_grads, Parameters<Real>& grads) const;

  GradientResult<Real> gradients(const Parameters<Real>& params,
                                 std::span<const Observation> frames,
                                 const RecurrentState<Real>& state, const LossFn<Real>& loss,
                                 unsigned heads = kAllHeads) const;

 private:
  void check_params(const Parameters<Real>& params) const;
  std::span<const Real> view(const Parameters<Real>& p, Block b) const;
  std::span<Real> view(Parameters<Real>& p, Block b) const;

  NetworkConfig config_;
  const ParamLayout* layout_;
};

extern template struct Parameters<float>;
extern template struct Parameters<double>;
extern template struct RecurrentState<float>;
extern template struct RecurrentState<double>;
extern template class Network<float>;
extern template class Network<double>;

// Checkpoints: magic, version, config fingerprint, canonical config text, then
// each block as name + shape header + little-endian float32 data.

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void save_checkpoint(const std::filesystem::path& path, const Parameters<float>& params);
/// Reads any checkpoint, taking the network config from the file.
Parameters<float> load_checkpoint(const std::filesystem::path& path);
/// Reads a checkpoint whose fingerprint must match `expected`.
Parameters<float> load_checkpoint(const std::filesystem::path& path, const NetworkConfig& expected);

}  // namespace unrealdc::netcore
