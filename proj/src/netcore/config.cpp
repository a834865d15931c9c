#include <map>
#include <memory>
#include <mutex>
#include <sstream>

#include "unrealdc/netcore.hpp"

namespace unrealdc::netcore {

NetworkConfig NetworkConfig::full(int actions) {
  NetworkConfig c;
  c.action_count = actions;
  return c;
}

NetworkConfig NetworkConfig::small(int actions) {
  NetworkConfig c;
  c.input_height = 24;
  c.input_width = 24;
  c.conv1 = {8, 4, 2};
  c.conv2 = {16, 3, 2};
  c.fc_size = 64;
  c.recurrent_size = 64;
  c.action_count = actions;
  c.pc_height = 6;
  c.pc_width = 6;
  c.pc_channels = 8;
  c.pc_kernel = 2;
  c.pc_stride = 2;
  return c;
}

NetworkConfig NetworkConfig::tiny(int actions) {
  NetworkConfig c;
  c.input_height = 8;
  c.input_width = 8;
  c.conv1 = {2, 4, 2};
  c.conv2 = {2, 2, 1};
  c.fc_size = 8;
  c.recurrent_size = 8;
  c.action_count = actions;
  c.pc_height = 2;
  c.pc_width = 2;
  c.pc_channels = 3;
  c.pc_kernel = 2;
  c.pc_stride = 1;
  return c;
}

NetworkConfig NetworkConfig::from_profile(std::string_view profile, int actions) {
  if (profile == "full") return full(actions);
  if (profile == "small") return small(actions);
  if (profile == "tiny") return tiny(actions);
  throw std::invalid_argument("unknown network profile '" + std::string(profile) +
                              "' (expected full, small or tiny)");
}

void NetworkConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("network config: " + msg); };
  if (input_height <= 0 || input_width <= 0 || input_channels != 3) fail("input must be HxWx3");
  for (const auto* conv : {&conv1, &conv2}) {
    if (conv->filters <= 0 || conv->kernel <= 0 || conv->stride <= 0) fail("bad conv spec");
  }
  if (conv1_height() <= 0 || conv1_width() <= 0) fail("conv1 kernel larger than input");
  if (conv2_height() <= 0 || conv2_width() <= 0) fail("conv2 kernel larger than conv1 output");
  if (fc_size <= 0 || recurrent_size <= 0 || unroll_length <= 0) fail("sizes must be positive");
  if (action_count <= 0) fail("action count must be positive");
  if (pc_height <= 0 || pc_width <= 0 || pc_channels <= 0 || pc_kernel <= 0 || pc_stride <= 0) {
    fail("bad pixel-control geometry");
  }
  if (pc_pre_height() <= 0 || pc_pre_width() <= 0 ||
      (pc_pre_height() - 1) * pc_stride + pc_kernel != pc_height ||
      (pc_pre_width() - 1) * pc_stride + pc_kernel != pc_width) {
    fail("pixel-control deconvolution does not produce the requested map size");
  }
  if (input_height % pc_height != 0 || input_width % pc_width != 0) {
    fail("input dims must divide evenly into pixel-control regions");
  }
}

std::string NetworkConfig::canonical() const {
  std::ostringstream os;
  os << "input_height=" << input_height << '\n'
     << "input_width=" << input_width << '\n'
     << "input_channels=" << input_channels << '\n'
     << "conv1_filters=" << conv1.filters << '\n'
     << "conv1_kernel=" << conv1.kernel << '\n'
     << "conv1_stride=" << conv1.stride << '\n'
     << "conv2_filters=" << conv2.filters << '\n'
     << "conv2_kernel=" << conv2.kernel << '\n'
     << "conv2_stride=" << conv2.stride << '\n'
     << "fc_size=" << fc_size << '\n'
     << "recurrent_size=" << recurrent_size << '\n'
     << "unroll_length=" << unroll_length << '\n'
     << "action_count=" << action_count << '\n'
     << "pc_height=" << pc_height << '\n'
     << "pc_width=" << pc_width << '\n'
     << "pc_channels=" << pc_channels << '\n'
     << "pc_kernel=" << pc_kernel << '\n'
     << "pc_stride=" << pc_stride << '\n';
  return os.str();
}

NetworkConfig parse_canonical(std::string_view text) {
  std::map<std::string, int, std::less<>> kv;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("bad config line: " + line);
    kv[line.substr(0, eq)] = std::stoi(line.substr(eq + 1));
  }
  auto get = [&](std::string_view key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw std::invalid_argument("missing config key: " + std::string(key));
    return it->second;
  };
  NetworkConfig c;
  c.input_height = get("input_height");
  c.input_width = get("input_width");
  c.input_channels = get("input_channels");
  c.conv1 = {get("conv1_filters"), get("conv1_kernel"), get("conv1_stride")};
  c.conv2 = {get("conv2_filters"), get("conv2_kernel"), get("conv2_stride")};
  c.fc_size = get("fc_size");
  c.recurrent_size = get("recurrent_size");
  c.unroll_length = get("unroll_length");
  c.action_count = get("action_count");
  c.pc_height = get("pc_height");
  c.pc_width = get("pc_width");
  c.pc_channels = get("pc_channels");
  c.pc_kernel = get("pc_kernel");
  c.pc_stride = get("pc_stride");
  c.validate();
  return c;
}

std::uint64_t NetworkConfig::fingerprint() const {
  std::uint64_t h = 14695981039346656037ULL;  // FNV-1a
  for (const unsigned char ch : canonical()) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

ParamLayout::ParamLayout(const NetworkConfig& c) : config(c) {
  c.validate();
  const int a = c.action_count;
  const int r = c.recurrent_size;
  auto set = [&](Block b, std::string name, std::vector<int> shape) {
    auto& info = blocks[static_cast<std::size_t>(b)];
    info.name = std::move(name);
    info.shape = std::move(shape);
    info.size = 1;
    for (const int d : info.shape) info.size *= static_cast<std::size_t>(d);
  };
  set(Block::Conv1W, "conv1.weight", {c.conv1.filters, c.conv1.kernel, c.conv1.kernel, c.input_channels});
  set(Block::Conv1B, "conv1.bias", {c.conv1.filters});
  set(Block::Conv2W, "conv2.weight", {c.conv2.filters, c.conv2.kernel, c.conv2.kernel, c.conv1.filters});
  set(Block::Conv2B, "conv2.bias", {c.conv2.filters});
  set(Block::FcW, "fc.weight", {c.fc_size, c.conv2_size()});
  set(Block::FcB, "fc.bias", {c.fc_size});
  set(Block::LstmWx, "lstm.weight_input", {4 * r, c.fc_size});
  set(Block::LstmWh, "lstm.weight_hidden", {4 * r, r});
  set(Block::LstmB, "lstm.bias", {4 * r});
  set(Block::PolicyW, "policy.weight", {a, r});
  set(Block::PolicyB, "policy.bias", {a});
  set(Block::ValueW, "value.weight", {1, r});
  set(Block::ValueB, "value.bias", {1});
  set(Block::RpW, "reward_prediction.weight", {3, 3 * c.conv2_size()});
  set(Block::RpB, "reward_prediction.bias", {3});
  set(Block::PcFcW, "pixel_control.fc.weight", {c.pc_pre_size(), r});
  set(Block::PcFcB, "pixel_control.fc.bias", {c.pc_pre_size()});
  set(Block::PcDeconvW, "pixel_control.deconv.weight", {c.pc_channels, c.pc_kernel, c.pc_kernel, a});
  set(Block::PcDeconvB, "pixel_control.deconv.bias", {a});
  for (auto& info : blocks) {
    info.offset = total;
    total += info.size;
  }
}

const ParamLayout& layout_for(const NetworkConfig& config) {
  thread_local const ParamLayout* last = nullptr;
  if (last && last->config == config) return *last;
  static std::mutex mu;
  static std::map<std::string, std::unique_ptr<ParamLayout>> cache;
  const std::string key = config.canonical();
  std::lock_guard lock(mu);
  auto& slot = cache[key];
  if (!slot) slot = std::make_unique<ParamLayout>(config);
  last = slot.get();
  return *slot;
}

NonFiniteLoss::NonFiniteLoss(std::string head)
    : std::runtime_error("non-finite loss in head '" + head + "'"), head_(std::move(head)) {}

}  // namespace unrealdc::netcore
