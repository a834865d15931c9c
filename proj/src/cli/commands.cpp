#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "unrealdc/arbiter.hpp"
#include "unrealdc/cli.hpp"
#include "unrealdc/evalkit.hpp"
#include "unrealdc/trainer.hpp"

#ifndef UNREALDC_VERSION
#define UNREALDC_VERSION "0.0.0+unknown"
#endif

namespace unrealdc::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::string version() { return UNREALDC_VERSION; }

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GlobalOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<int> workers;
  std::optional<std::int64_t> steps;
};

struct TrainOptions {
  std::optional<std::string> role;
  std::vector<std::string> maps;
  std::vector<std::string> overrides;
  std::size_t curve_window = 50;
};

struct EvalOptions {
  std::vector<std::string> checkpoints;
  std::vector<std::string> maps;
  int episodes = 30;
  std::string mode = "timed";
  bool greedy = false;
  int threads = 1;
};

struct CompareOptions {
  std::string action;
  std::string navigation;
  std::vector<std::string> maps;
  int episodes = 30;
  std::string mode = "timed";
  bool greedy = false;
  bool pooled = false;
  std::optional<double> threshold;
  bool action_on_negative = false;
  int threads = 1;
};

struct DemoOptions {
  std::string action;
  std::string navigation;
  std::string map;
  std::string mode = "until-death";
  bool greedy = false;
  bool no_map = false;
};

fs::path output_root(const GlobalOptions& g) {
  if (!g.out.empty()) return g.out;
  if (const char* env = std::getenv("UNREALDC_OUT"); env && *env) return env;
  return "runs";
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
  if (!f) throw std::runtime_error("write failed for " + path.string());
}

minidoom::EnvConfig env_from(const GlobalOptions& g) {
  if (g.config.empty()) return {};
  return trainer::load_train_config(g.config).env;
}

minidoom::EpisodeMode parse_mode(const std::string& s) {
  auto m = minidoom::parse_episode_mode(s);
  if (!m) throw UsageError("invalid --mode '" + s + "' (expected timed or until-death)");
  return *m;
}

minidoom::MapSpec load_map_or_usage(const std::string& path) {
  if (!fs::exists(path)) throw UsageError("map file not found: " + path);
  try {
    return minidoom::load_map_file(path);
  } catch (const std::exception& e) {
    throw UsageError("cannot load map " + path + ": " + e.what());
  }
}

netcore::Parameters<float> load_ckpt_or_usage(const std::string& path) {
  if (!fs::exists(path)) throw UsageError("checkpoint not found: " + path);
  try {
    return netcore::load_checkpoint(path);
  } catch (const std::exception& e) {
    throw UsageError("cannot load checkpoint " + path + ": " + e.what());
  }
}

minidoom::EnvConfig env_for(minidoom::EnvConfig env, const netcore::NetworkConfig& net) {
  env.obs_height = net.input_height;
  env.obs_width = net.input_width;
  return env;
}

std::string stem(const std::string& path) { return fs::path(path).stem().string(); }

int cmd_train(const GlobalOptions& g, const TrainOptions& o, std::ostream& out, std::ostream& err) {
  trainer::TrainConfig cfg;
  try {
    if (!g.config.empty()) {
      if (!fs::exists(g.config)) throw UsageError("config file not found: " + g.config);
      cfg = trainer::load_train_config(g.config);
    }
    if (o.role) trainer::apply_override(cfg, "train.role", *o.role);
    if (!o.maps.empty()) {
      cfg.maps.clear();
      for (const auto& m : o.maps) cfg.maps.emplace_back(m);
    }
    for (const auto& kv : o.overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + kv + "'");
      trainer::apply_override(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (g.seed) cfg.seed = *g.seed;
    if (g.workers) cfg.workers = *g.workers;
    if (g.steps) cfg.total_steps = *g.steps;
    cfg.validate();
    for (const auto& m : cfg.maps) load_map_or_usage(m.string());
  } catch (const trainer::ConfigError& e) {
    throw UsageError(e.what());
  }

  const fs::path dir = output_root(g);
  fs::create_directories(dir);
  const fs::path ckpt_dir = dir / "checkpoints";
  json manifest = {
      {"command", "train"},
      {"version", version()},
      {"seed", cfg.seed},
      {"role", std::string(trainer::to_string(cfg.role))},
      {"network_fingerprint", cfg.network_config().fingerprint()},
      {"config", trainer::to_ini(cfg)},
      {"layout",
       {{"config", "config.ini"},
        {"log", "train_log.csv"},
        {"curves", "curves.csv"},
        {"checkpoints", "checkpoints/"},
        {"final_checkpoint", "checkpoints/final.bin"}}},
  };
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
  write_file(dir / "config.ini", trainer::to_ini(cfg));

  trainer::TrainHooks hooks;
  hooks.log_path = dir / "train_log.csv";
  hooks.checkpoint_dir = ckpt_dir;
  const auto result = trainer::train(cfg, hooks);

  std::ostringstream curves;
  curves << "global_step,kill_death_ratio,object_death_ratio\n";
  for (const auto& p : trainer::ratio_curve(result.log, o.curve_window)) {
    curves << p.global_step << ',' << p.kill_death << ',' << p.object_death << '\n';
  }
  write_file(dir / "curves.csv", curves.str());

  bool worker_failed = false;
  for (std::size_t i = 0; i < result.workers.size(); ++i) {
    if (!result.workers[i].error.empty()) {
      err << "worker " << i << " aborted: " << result.workers[i].error << '\n';
      worker_failed = true;
    }
  }
  out << "run_dir=" << dir.string() << '\n'
      << "global_steps=" << result.global_steps << '\n'
      << "updates=" << result.applied_updates << '\n'
      << "skipped_updates=" << result.skipped_updates << '\n'
      << "episodes=" << result.log.size() << '\n'
      << "checkpoint=" << (ckpt_dir / "final.bin").string() << '\n';
  return worker_failed ? kExitRuntime : kExitOk;
}

int cmd_eval(const GlobalOptions& g, const EvalOptions& o, std::ostream& out) {
  if (o.episodes < 1) throw UsageError("--episodes must be >= 1");
  const auto mode = parse_mode(o.mode);
  const auto env = env_from(g);
  std::vector<evalkit::MapEntry> maps;
  for (const auto& m : o.maps) maps.push_back({stem(m), load_map_or_usage(m)});
  evalkit::EvalReport report;
  for (const auto& path : o.checkpoints) {
    auto params = load_ckpt_or_usage(path);
    const auto net = params.config;
    std::unique_ptr<arbiter::PolicyAgent> agent;
    try {
      agent = std::make_unique<arbiter::PolicyAgent>(
          std::move(params), o.greedy ? arbiter::ActMode::Greedy : arbiter::ActMode::Sample,
          stem(path));
    } catch (const arbiter::AgentMismatch& e) {
      throw UsageError(e.what());
    }
    const auto profile = net.action_count == 5 ? minidoom::RewardProfile::action()
                                               : minidoom::RewardProfile::navigation();
    for (const auto& m : maps) {
      auto eps = evalkit::run_episodes(*agent, m.map, env_for(env, net), o.episodes, mode,
                                       g.seed.value_or(1), profile, o.threads);
      report.rows.push_back(evalkit::summarize(m.name, stem(path), std::move(eps)));
    }
  }
  const fs::path dir = output_root(g);
  fs::create_directories(dir);
  write_file(dir / "eval_means.csv", evalkit::means_csv(report));
  write_file(dir / "eval_episodes.csv", evalkit::episodes_csv(report));
  out << evalkit::means_csv(report);
  return kExitOk;
}

int cmd_compare(const GlobalOptions& g, const CompareOptions& o, std::ostream& out) {
  if (o.episodes < 2) throw UsageError("--episodes must be >= 2 for t-tests");
  auto action = load_ckpt_or_usage(o.action);
  auto nav = load_ckpt_or_usage(o.navigation);
  const auto mode = o.greedy ? arbiter::ActMode::Greedy : arbiter::ActMode::Sample;
  arbiter::RouterOptions ro;
  ro.zero_threshold = o.threshold;
  ro.action_only_on_negative = o.action_on_negative;

  evalkit::CompareRequest req;
  try {
    if (action.config.action_count != 5) {
      throw arbiter::AgentMismatch("action checkpoint has " +
                                   std::to_string(action.config.action_count) +
                                   " actions; expected 5");
    }
    auto combined = std::make_shared<arbiter::CombinedAgent>(action, nav, mode, ro);
    auto solo = std::make_shared<arbiter::PolicyAgent>(action, mode, "action");
    req.agents = {{"action", solo}, {"combined", combined}};
  } catch (const arbiter::AgentMismatch& e) {
    throw UsageError(e.what());
  }
  for (const auto& m : o.maps) req.maps.push_back({stem(m), load_map_or_usage(m)});
  req.episodes = o.episodes;
  req.mode = parse_mode(o.mode);
  req.env = env_for(env_from(g), action.config);
  req.seed = g.seed.value_or(1);
  req.test = o.pooled ? evalkit::TTestKind::Student : evalkit::TTestKind::Welch;
  req.threads = o.threads;
  const auto report = evalkit::compare(req);

  const fs::path dir = output_root(g);
  fs::create_directories(dir);
  write_file(dir / "means.csv", evalkit::means_csv(report));
  write_file(dir / "p_values.csv", evalkit::p_values_csv(report));
  write_file(dir / "episodes.csv", evalkit::episodes_csv(report));
  out << evalkit::pretty_table(report);
  return kExitOk;
}

std::string event_list(const minidoom::EventCounts& ev) {
  std::string s;
  for (std::size_t i = 0; i < minidoom::kEventKinds; ++i) {
    for (int k = 0; k < ev.counts[i]; ++k) {
      if (!s.empty()) s += '+';
      s += minidoom::to_string(static_cast<minidoom::Event>(i));
    }
  }
  return s.empty() ? "-" : s;
}

int cmd_demo(const GlobalOptions& g, const DemoOptions& o, std::ostream& out) {
  if (o.action.empty() && o.navigation.empty()) {
    throw UsageError("demo needs --action and/or --nav checkpoints");
  }
  const auto act_mode = o.greedy ? arbiter::ActMode::Greedy : arbiter::ActMode::Sample;
  std::unique_ptr<arbiter::Agent> agent;
  netcore::NetworkConfig net;
  minidoom::RewardProfile profile = minidoom::RewardProfile::action();
  try {
    if (!o.action.empty() && !o.navigation.empty()) {
      auto a = load_ckpt_or_usage(o.action);
      net = a.config;
      agent = std::make_unique<arbiter::CombinedAgent>(std::move(a), load_ckpt_or_usage(o.navigation),
                                                       act_mode);
    } else {
      auto p = load_ckpt_or_usage(o.action.empty() ? o.navigation : o.action);
      net = p.config;
      if (net.action_count == 3) profile = minidoom::RewardProfile::navigation();
      agent = std::make_unique<arbiter::PolicyAgent>(std::move(p), act_mode);
    }
  } catch (const arbiter::AgentMismatch& e) {
    throw UsageError(e.what());
  }
  auto env_cfg = env_for(env_from(g), net);
  env_cfg.mode = parse_mode(o.mode);
  minidoom::Environment env(load_map_or_usage(o.map), env_cfg);

  const auto stats = evalkit::run_episode(
      *agent, env, g.seed.value_or(1), profile,
      [&](const minidoom::WorldState& s, const arbiter::Decision& d, const minidoom::StepOutcome& r) {
        out << "tick=" << s.tick << " agent="
            << (d.routing ? std::string(arbiter::to_string(d.routing->choice)) : "single")
            << " action=" << minidoom::to_string(d.action) << " reward=" << r.reward
            << " events=" << event_list(r.events) << '\n';
        if (!o.no_map) {
          std::istringstream view(minidoom::ascii_view(s, env.map()));
          for (std::string line; std::getline(view, line);) out << "  | " << line << '\n';
        }
      });
  out << "summary steps=" << stats.steps << " kills=" << stats.kills << " deaths=" << stats.deaths
      << " objects=" << stats.objects << " return=" << stats.shaped_return << '\n';
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Divide-and-conquer actor-critic agents for MiniDoom", "unrealdc"};
  app.fallthrough();
  app.require_subcommand(1);
  app.set_version_flag("--version", version());

  GlobalOptions g;
  app.add_option("--config", g.config, "INI config file ([train], [loss], [env])");
  app.add_option("--seed", g.seed, "Random seed");
  app.add_option("--out", g.out, "Output directory (default: $UNREALDC_OUT or ./runs)");
  app.add_option("--workers", g.workers, "Training worker threads");
  app.add_option("--steps", g.steps, "Global step budget");

  TrainOptions to;
  auto* train = app.add_subcommand("train", "Train an agent");
  train->add_option("--role", to.role, "action or navigation");
  train->add_option("--map", to.maps, "Training map (repeatable)");
  train->add_option("--set", to.overrides, "Override a config key: section.key=value (repeatable)");
  train->add_option("--curve-window", to.curve_window, "Episodes per point in curves.csv");

  EvalOptions eo;
  auto* eval = app.add_subcommand("eval", "Evaluate single-network agents");
  eval->add_option("--checkpoint", eo.checkpoints, "Checkpoint (repeatable)")->required();
  eval->add_option("--map", eo.maps, "Map (repeatable)")->required();
  eval->add_option("--episodes", eo.episodes, "Episodes per map");
  eval->add_option("--mode", eo.mode, "timed or until-death");
  eval->add_flag("--greedy", eo.greedy, "Argmax instead of sampling");
  eval->add_option("--threads", eo.threads, "Evaluation threads");

  CompareOptions co;
  auto* cmp = app.add_subcommand("compare", "Action-only vs combined agent with t-tests");
  cmp->add_option("--action", co.action, "Action agent checkpoint (5 actions)")->required();
  cmp->add_option("--nav", co.navigation, "Navigation agent checkpoint (3 actions)")->required();
  cmp->add_option("--map", co.maps, "Map (repeatable)")->required();
  cmp->add_option("--episodes", co.episodes, "Episodes per cell");
  cmp->add_option("--mode", co.mode, "timed or until-death");
  cmp->add_flag("--greedy", co.greedy, "Argmax instead of sampling");
  cmp->add_flag("--pooled", co.pooled, "Student pooled-variance t-test instead of Welch");
  cmp->add_option("--threshold", co.threshold, "Route to action when P(zero reward) < threshold");
  cmp->add_flag("--action-on-negative", co.action_on_negative,
                "Route to action only on a negative prediction");
  cmp->add_option("--threads", co.threads, "Evaluation threads");

  DemoOptions dopt;
  auto* demo = app.add_subcommand("demo", "Print a per-step trace of one episode");
  demo->add_option("--action", dopt.action, "Action agent checkpoint");
  demo->add_option("--nav", dopt.navigation, "Navigation agent checkpoint");
  demo->add_option("--map", dopt.map, "Map")->required();
  demo->add_option("--mode", dopt.mode, "timed or until-death");
  demo->add_flag("--greedy", dopt.greedy, "Argmax instead of sampling");
  demo->add_flag("--no-map", dopt.no_map, "Omit the ASCII map after each step");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*train) return cmd_train(g, to, out, err);
    if (*eval) return cmd_eval(g, eo, out);
    if (*cmp) return cmd_compare(g, co, out);
    if (*demo) return cmd_demo(g, dopt, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const trainer::ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

int run_main(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace unrealdc::cli
