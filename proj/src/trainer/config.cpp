#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <map>
#include <sstream>

#include "unrealdc/trainer.hpp"

namespace unrealdc::trainer {

namespace fs = std::filesystem;

std::string_view to_string(AgentRole r) {
  return r == AgentRole::Action ? "action" : "navigation";
}

std::optional<AgentRole> parse_role(std::string_view s) {
  if (s == "action") return AgentRole::Action;
  if (s == "navigation") return AgentRole::Navigation;
  return std::nullopt;
}

TrainConfig TrainConfig::full_defaults() {
  TrainConfig c;
  c.workers = 8;
  c.total_steps = 80'000'000;
  c.network_profile = "full";
  c.env.step_limit = 2100;
  return c;
}

minidoom::RewardProfile TrainConfig::reward_profile() const {
  return role == AgentRole::Action ? minidoom::RewardProfile::action()
                                   : minidoom::RewardProfile::navigation();
}

std::span<const minidoom::EnvAction> TrainConfig::action_set() const {
  if (role == AgentRole::Action) return minidoom::kActionAgentActions;
  return minidoom::kNavigationAgentActions;
}

netcore::NetworkConfig TrainConfig::network_config() const {
  return netcore::NetworkConfig::from_profile(network_profile, action_count());
}

minidoom::EnvConfig TrainConfig::env_config() const {
  auto e = env;
  const auto net = network_config();
  e.obs_height = net.input_height;
  e.obs_width = net.input_width;
  return e;
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("invalid config: " + m); };
  if (workers < 1) fail("workers must be >= 1");
  if (total_steps < 0) fail("steps must be >= 0");
  if (!(learning_rate >= 0.0)) fail("learning_rate must be >= 0");
  if (!(rmsprop_decay >= 0.0 && rmsprop_decay < 1.0)) fail("rmsprop_decay must be in [0,1)");
  if (!(rmsprop_epsilon > 0.0)) fail("rmsprop_epsilon must be > 0");
  if (!(grad_clip_norm >= 0.0)) fail("grad_clip_norm must be >= 0");
  if (maps.empty()) fail("at least one map is required");
  if (rp_batch < 1) fail("rp_batch must be >= 1");
  if (checkpoint_interval < 0) fail("checkpoint_interval must be >= 0");
  netcore::NetworkConfig net;
  try {
    net = network_config();
    net.validate();
    loss.validate();
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
  if (rollout_length < 2 || rollout_length > net.unroll_length) {
    fail("rollout_length must be in [2, " + std::to_string(net.unroll_length) + "]");
  }
  if (replay_capacity < static_cast<std::size_t>(rollout_length)) {
    fail("replay_capacity must hold at least one rollout");
  }
  if (env.max_health < 1 || env.monster_health < 1 || env.monster_damage < 0 ||
      env.monster_cooldown < 1 || env.fire_cooldown < 0) {
    fail("env health/damage/cooldown values out of range");
  }
  if (!(env.monster_chase_prob >= 0.0 && env.monster_chase_prob <= 1.0)) {
    fail("monster_chase_prob must be in [0,1]");
  }
  if (env.step_limit && *env.step_limit < 1) fail("step_limit must be >= 1");
  if (!(env.fov_degrees > 0.0 && env.fov_degrees < 180.0)) fail("fov_degrees must be in (0,180)");
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

template <typename Int>
Int parse_int(std::string_view key, std::string_view text) {
  const std::string t = trim(text);
  Int v{};
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty()) {
    throw ConfigError("invalid integer for " + std::string(key) + ": '" + t + "'");
  }
  return v;
}

double parse_double(std::string_view key, std::string_view text) {
  const std::string t = trim(text);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (t.empty() || used != t.size()) {
    throw ConfigError("invalid number for " + std::string(key) + ": '" + t + "'");
  }
  return v;
}

bool parse_bool(std::string_view key, std::string_view text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw ConfigError("invalid boolean for " + std::string(key) + ": '" + t + "'");
}

std::vector<fs::path> parse_paths(std::string_view text, const fs::path& base) {
  std::vector<fs::path> out;
  std::stringstream ss{std::string(text)};
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    fs::path p(item);
    out.push_back(p.is_relative() && !base.empty() ? base / p : p);
  }
  return out;
}

using Setter = void (*)(TrainConfig&, std::string_view, std::string_view, const fs::path&);

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"train.role",
       [](TrainConfig& c, std::string_view k, std::string_view v, const fs::path&) {
         auto r = parse_role(trim(v));
         if (!r) throw ConfigError("invalid value for " + std::string(k) + ": expected action or navigation");
         c.role = *r;
       }},
      {"train.workers", [](TrainConfig& c, std::string_view k, std::string_view v, const fs::path&) { c.workers = parse_int<int>(k, v); }},
      {"train.rollout_length", [](TrainConfig& c, std::string_view k, std::string_view v, const fs::path&) { c.rollout_length = parse_int<int>(k, v); }},
      {"train.steps", [](TrainConfig& c, std::string_view k, std::string_view v, const fs::path&) { c.total_steps = parse_int<std::int64_t>(k, v); }},
      {"train.learning_rate", [](TrainConfig& c, std::string_view k, std::string_view v, const fs::path&) { c.learning_rate = parse_double(k, v); }},
      {"train.lr_linear_decay", [](TrainConfig& c, std::string_view k, std::string_view v, const fs::path&) { c.lr_linear_decay = parse_bool(k, v); }},
      {"train.rmsprop_decay", [](TrainConfig& c, std::string_view k, std::string_view v, const fs::path&) { c.rmsprop_decay = parse_double(k, v); }},
      {"train.rmsprop_epsilon", [](TrainConfig& c, std::string_view k, std::string_view v, const fs::path&) { c.rmsprop_epsilon = parse_double(k, v); }},
      {"train.grad_clip_norm", [](TrainConfig& c, std::string_view k, std::string_view v, const fs::path&) { c.grad_clip_norm = parse_double(k, v); }},
      {"train.maps", [](TrainConfig& c, std::string_view, std::string_view v, const fs::path& base) { c.maps = parse_paths(v, base); }},
      {"train.network_profile",
       [](TrainConfig& c, std::string_view k, std::string_view v, const fs::path&) {
         const auto p = trim(v);
         if (p != "full" && p != "small" && p != "tiny") {
           throw ConfigError("invalid value for " + std::string(k) + ": expected full, small or tiny");
         }
         c.network_profile = p;
       }},
      {"train.precision",
       [](TrainConfig& c, std::string_view k, std::string_view v, const fs::path&) {
         const auto p = trim(v);
         if (p == "float") c.precision = Precision::Float;
         else if (p == "double") c.precision = Precision::Double;
         else throw ConfigError("invalid value for " + std::string(k) + ": expected float or double");
       }},
      {"train.replay_capacity", [](TrainConfig& c, std::string_view k, std::string_view v, const fs::path&) { c.replay_capacity = parse_int<std::size_t>(k, v); }},
      {"train.rp_batch", [](TrainConfig& c, std::string_view k, std::string_view v, const fs::path&) { c.rp_batch = parse_int<std::size_t>(k, v); }},
      {"train.seed", [](TrainConfig& c, std::string_view k, std::string_view v, const fs::path&) { c.seed = parse_int<std::uint64_t>(k, v); }},
      {"train.checkpoint_interval", [](TrainConfig& c, std::string_view k, std::string_view v, const fs::path&) { c.checkpoint_interval = parse_int<std::int64_t>(k, v); }},
      {"loss.gamma", [](TrainConfig& c, std::string_view k, std::string_view v, const fs::path&) { c.loss.gamma = parse_double(k, v); }},
      {"loss.lambda_vr", [](TrainConfig& c, std::string_view k, std::string_view v, const fs::path&) { c.loss.lambda_vr = parse_double(k, v); }},
      {"loss.lambda_rp", [](TrainConfig& c, std::string_view k, std::string_view v, const fs::path&) { c.loss.lambda_rp = parse_double(k, v); }},
      {"loss.lambda_pc", [](TrainConfig& c, std::string_view k, std::string_view v, const fs::path&) { c.loss.lambda_pc = parse_double(k, v); }},
      {"loss.gamma_pc", [](TrainConfig& c, std::string_view k, std::string_view v, const fs::path&) { c.loss.gamma_pc = parse_double(k, v); }},
      {"loss.entropy_beta", [](TrainConfig& c, std::string_view k, std::string_view v, const fs::path&) { c.loss.entropy_beta = parse_double(k, v); }},
      {"env.max_health", [](TrainConfig& c, std::string_view k, std::string_view v, const fs::path&) { c.env.max_health = parse_int<int>(k, v); }},
      {"env.monster_health", [](TrainConfig& c, std::string_view k, std::string_view v, const fs::path&) { c.env.monster_health = parse_int<int>(k, v); }},
      {"env.monster_damage", [](TrainConfig& c, std::string_view k, std::string_view v, const fs::path&) { c.env.monster_damage = parse_int<int>(k, v); }},
      {"env.monster_cooldown", [](TrainConfig& c, std::string_view k, std::string_view v, const fs::path&) { c.env.monster_cooldown = parse_int<int>(k, v); }},
      {"env.fire_cooldown", [](TrainConfig& c, std::string_view k, std::string_view v, const fs::path&) { c.env.fire_cooldown = parse_int<int>(k, v); }},
      {"env.monster_chase_prob", [](TrainConfig& c, std::string_view k, std::string_view v, const fs::path&) { c.env.monster_chase_prob = parse_double(k, v); }},
      {"env.mode",
       [](TrainConfig& c, std::string_view k, std::string_view v, const fs::path&) {
         auto m = minidoom::parse_episode_mode(trim(v));
         if (!m) throw ConfigError("invalid value for " + std::string(k) + ": expected timed or until-death");
         c.env.mode = *m;
       }},
      {"env.step_limit",
       [](TrainConfig& c, std::string_view k, std::string_view v, const fs::path&) {
         const auto t = trim(v);
         if (t.empty() || t == "map") c.env.step_limit.reset();
         else c.env.step_limit = parse_int<int>(k, t);
       }},
      {"env.end_when_cleared", [](TrainConfig& c, std::string_view k, std::string_view v, const fs::path&) { c.env.end_when_cleared = parse_bool(k, v); }},
      {"env.fov_degrees", [](TrainConfig& c, std::string_view k, std::string_view v, const fs::path&) { c.env.fov_degrees = parse_double(k, v); }},
  };
  return table;
}

void set_key(TrainConfig& c, std::string_view key, std::string_view value, const fs::path& base) {
  std::string full(key);
  if (full.find('.') == std::string::npos) full = "train." + full;
  const auto& table = setters();
  auto it = table.find(full);
  if (it == table.end()) throw ConfigError("unknown config key: " + full);
  it->second(c, full, value, base);
}

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

void apply_override(TrainConfig& config, std::string_view key, std::string_view value) {
  set_key(config, key, value, {});
}

TrainConfig load_train_config(const fs::path& path) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(path.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("cannot read config " + path.string() + ": " + e.message() +
                      (e.line() ? " (line " + std::to_string(e.line()) + ")" : ""));
  }
  TrainConfig c;
  const fs::path base = path.parent_path();
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw ConfigError("config key outside a section: " + section);
    }
    for (const auto& [key, node] : body) set_key(c, section + "." + key, node.data(), base);
  }
  return c;
}

std::string to_ini(const TrainConfig& c) {
  std::ostringstream os;
  os << "[train]\n"
     << "role = " << to_string(c.role) << '\n'
     << "workers = " << c.workers << '\n'
     << "rollout_length = " << c.rollout_length << '\n'
     << "steps = " << c.total_steps << '\n'
     << "learning_rate = " << fmt_double(c.learning_rate) << '\n'
     << "lr_linear_decay = " << (c.lr_linear_decay ? "true" : "false") << '\n'
     << "rmsprop_decay = " << fmt_double(c.rmsprop_decay) << '\n'
     << "rmsprop_epsilon = " << fmt_double(c.rmsprop_epsilon) << '\n'
     << "grad_clip_norm = " << fmt_double(c.grad_clip_norm) << '\n'
     << "maps = ";
  for (std::size_t i = 0; i < c.maps.size(); ++i) os << (i ? "," : "") << c.maps[i].string();
  os << '\n'
     << "network_profile = " << c.network_profile << '\n'
     << "precision = " << (c.precision == Precision::Float ? "float" : "double") << '\n'
     << "replay_capacity = " << c.replay_capacity << '\n'
     << "rp_batch = " << c.rp_batch << '\n'
     << "seed = " << c.seed << '\n'
     << "checkpoint_interval = " << c.checkpoint_interval << "\n\n"
     << "[loss]\n"
     << "gamma = " << fmt_double(c.loss.gamma) << '\n'
     << "lambda_vr = " << fmt_double(c.loss.lambda_vr) << '\n'
     << "lambda_rp = " << fmt_double(c.loss.lambda_rp) << '\n'
     << "lambda_pc = " << fmt_double(c.loss.lambda_pc) << '\n'
     << "gamma_pc = " << fmt_double(c.loss.gamma_pc) << '\n'
     << "entropy_beta = " << fmt_double(c.loss.entropy_beta) << "\n\n"
     << "[env]\n"
     << "max_health = " << c.env.max_health << '\n'
     << "monster_health = " << c.env.monster_health << '\n'
     << "monster_damage = " << c.env.monster_damage << '\n'
     << "monster_cooldown = " << c.env.monster_cooldown << '\n'
     << "fire_cooldown = " << c.env.fire_cooldown << '\n'
     << "monster_chase_prob = " << fmt_double(c.env.monster_chase_prob) << '\n'
     << "mode = " << minidoom::to_string(c.env.mode) << '\n'
     << "step_limit = " << (c.env.step_limit ? std::to_string(*c.env.step_limit) : "map") << '\n'
     << "end_when_cleared = " << (c.env.end_when_cleared ? "true" : "false") << '\n'
     << "fov_degrees = " << fmt_double(c.env.fov_degrees) << '\n';
  return os.str();
}

}  // namespace unrealdc::trainer
