#include <doctest.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>

#include "unrealdc/cli.hpp"
#include "unrealdc/evalkit.hpp"
#include "unrealdc/trainer.hpp"

using namespace unrealdc;
namespace fs = std::filesystem;

namespace {

const fs::path kSource = UNREALDC_SOURCE_DIR;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("unrealdc_test_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

std::string config(const std::string& name) { return (kSource / "configs" / (name + ".ini")).string(); }

// Untrained checkpoints for both roles, written once.
const fs::path& agents() {
  static const fs::path dir = [] {
    const auto d = scratch("agents");
    for (const char* role : {"arena", "nav9"}) {
      const auto r = invoke({"--config", config(role), "--steps", "0", "--out", (d / role).string(), "train"});
      REQUIRE(r.code == 0);
    }
    return d;
  }();
  return dir;
}

fs::path action_ckpt() { return agents() / "arena" / "checkpoints" / "final.bin"; }
fs::path nav_ckpt() { return agents() / "nav9" / "checkpoints" / "final.bin"; }

}  // namespace

TEST_CASE("usage errors exit with 2") {
  const auto missing = (kSource / "maps" / "no_such.map").string();
  const auto r = invoke({"--config", config("nav9"), "--steps", "0", "--out", scratch("missing").string(),
                      "train", "--map", missing});
  CHECK(r.code == cli::kExitUsage);
  CHECK(r.err.find(missing) != std::string::npos);

  CHECK(invoke({"bogus"}).code == cli::kExitUsage);
  CHECK(invoke({}).code == cli::kExitUsage);
  CHECK(invoke({"--help"}).code == cli::kExitOk);
  CHECK(invoke({"--config", "/nonexistent.ini", "train"}).code == cli::kExitUsage);
  CHECK(invoke({"--config", config("nav9"), "train", "--set", "train.bogus=1"}).code == cli::kExitUsage);
  CHECK(invoke({"--config", config("nav9"), "train", "--set", "novalue"}).code == cli::kExitUsage);
  CHECK(invoke({"demo", "--map", (kSource / "maps" / "nav9.map").string()}).code == cli::kExitUsage);
}

TEST_CASE("zero-step training writes the initial parameters") {
  const auto dir = scratch("zero");
  const auto r = invoke({"--config", config("nav9"), "--steps", "0", "--seed", "5", "--out", dir.string(), "train"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("global_steps=0") != std::string::npos);
  for (const char* f : {"manifest.json", "config.ini", "train_log.csv", "curves.csv", "checkpoints/final.bin"}) {
    CHECK(fs::exists(dir / f));
  }
  auto cfg = trainer::load_train_config(config("nav9"));
  cfg.seed = 5;
  cfg.total_steps = 0;
  CHECK(netcore::load_checkpoint(dir / "checkpoints" / "final.bin") == trainer::train(cfg).params);
  const auto manifest = slurp(dir / "manifest.json");
  CHECK(manifest.find("\"network_fingerprint\"") != std::string::npos);
  CHECK(manifest.find("\"seed\": 5") != std::string::npos);
  CHECK(slurp(dir / "train_log.csv") == std::string(trainer::kLogHeader) + "\n");
}

TEST_CASE("same seed, one worker: identical logs") {
  std::array<std::string, 2> logs;
  for (int i = 0; i < 2; ++i) {
    const auto dir = scratch("det" + std::to_string(i));
    const auto r = invoke({"--config", config("nav9"), "--workers", "1", "--steps", "3000", "--out",
                        dir.string(), "train", "--set", "network_profile=tiny"});
    REQUIRE(r.code == 0);
    logs[static_cast<std::size_t>(i)] = slurp(dir / "train_log.csv");
  }
  CHECK(logs[0] == logs[1]);
  CHECK(std::count(logs[0].begin(), logs[0].end(), '\n') > 5);
}

TEST_CASE("output root from the environment") {
  const auto dir = scratch("envroot");
  ::setenv("UNREALDC_OUT", dir.string().c_str(), 1);
  const auto r = invoke({"--config", config("nav9"), "--steps", "0", "train"});
  ::unsetenv("UNREALDC_OUT");
  REQUIRE(r.code == 0);
  CHECK(r.out.find(dir.string()) != std::string::npos);
}

TEST_CASE("compare writes both reports") {
  const auto dir = scratch("compare");
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = invoke({"--out", dir.string(), "--seed", "3", "compare", "--action", action_ckpt().string(),
                      "--nav", nav_ckpt().string(), "--map", (kSource / "maps" / "corridor.map").string(),
                      "--episodes", "2"});
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  REQUIRE(r.code == 0);
  CHECK(secs < 60.0);
  const auto means = slurp(dir / "means.csv");
  const auto pvals = slurp(dir / "p_values.csv");
  CHECK(means.rfind("map,agent,episodes,kills,deaths,objects,kill_death_ratio,object_death_ratio\n", 0) == 0);
  CHECK(pvals.rfind("map,agent_a,agent_b,p_kills,p_deaths,p_objects,sig_kills,sig_deaths,sig_objects\n", 0) == 0);
  CHECK(std::count(means.begin(), means.end(), '\n') == 3);
  CHECK(std::count(pvals.begin(), pvals.end(), '\n') == 2);
  CHECK(r.out.find("combined") != std::string::npos);
}

TEST_CASE("compare refuses swapped checkpoints") {
  const auto r = invoke({"--out", scratch("swap").string(), "compare", "--action", action_ckpt().string(),
                      "--nav", action_ckpt().string(), "--map", (kSource / "maps" / "corridor.map").string(),
                      "--episodes", "2"});
  CHECK(r.code == cli::kExitUsage);
  CHECK(invoke({"compare", "--action", action_ckpt().string(), "--nav", nav_ckpt().string(), "--map",
             (kSource / "maps" / "corridor.map").string(), "--episodes", "1"})
            .code == cli::kExitUsage);
}

TEST_CASE("eval") {
  const auto dir = scratch("eval");
  const auto r = invoke({"--out", dir.string(), "eval", "--checkpoint", nav_ckpt().string(), "--map",
                      (kSource / "maps" / "nav9.map").string(), "--episodes", "3", "--greedy"});
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind(std::string(evalkit::kMeansHeader), 0) == 0);
  CHECK(fs::exists(dir / "eval_means.csv"));
  CHECK(fs::exists(dir / "eval_episodes.csv"));
}

TEST_CASE("demo trace") {
  const std::regex line(R"(tick=(\d+) agent=(\w+) action=(\w+) reward=(\S+) events=(\S+))");
  const auto table = [](const std::string& ev, bool nav) {
    // Independent typing of the shaped-reward weights.
    const std::map<std::string, double> action{{"kill", 1.0}, {"death", -1.0}, {"missed_shot", -0.02},
                                               {"lost_health", -0.06}, {"object_gathered", 0.3}};
    const std::map<std::string, double> navigation{{"kill", 0.0}, {"death", -1.0}, {"missed_shot", 0.0},
                                                   {"lost_health", -0.1}, {"object_gathered", 0.5}};
    double sum = 0.0;
    if (ev == "-") return sum;
    std::istringstream is(ev);
    for (std::string e; std::getline(is, e, '+');) sum += (nav ? navigation : action).at(e);
    return sum;
  };

  SUBCASE("combined agent") {
    const auto r = invoke({"--seed", "4", "--config", config("heldout"), "demo", "--action",
                        action_ckpt().string(), "--nav", nav_ckpt().string(), "--map",
                        (kSource / "maps" / "heldout.map").string()});
    REQUIRE(r.code == 0);
    std::istringstream is(r.out);
    int ticks = 0, map_lines = 0;
    std::string summary;
    for (std::string l; std::getline(is, l);) {
      std::smatch m;
      if (std::regex_match(l, m, line)) {
        ++ticks;
        CHECK(std::stoi(m[1]) == ticks);
        CHECK((m[2] == "action" || m[2] == "navigation"));
        CHECK(std::stod(m[4]) == doctest::Approx(table(m[5], false)).epsilon(1e-9));
      } else if (l.rfind("  | ", 0) == 0) {
        ++map_lines;
      } else {
        summary = l;
      }
    }
    CHECK(summary.rfind("summary steps=" + std::to_string(ticks) + " ", 0) == 0);
    CHECK(map_lines == ticks * 11);
  }
  SUBCASE("single navigation agent") {
    const auto r = invoke({"demo", "--nav", nav_ckpt().string(), "--map", (kSource / "maps" / "nav9.map").string(),
                        "--no-map", "--mode", "timed"});
    REQUIRE(r.code == 0);
    std::istringstream is(r.out);
    int ticks = 0;
    for (std::string l; std::getline(is, l);) {
      std::smatch m;
      if (!std::regex_match(l, m, line)) continue;
      ++ticks;
      CHECK(m[2] == "single");
      CHECK(std::stod(m[4]) == doctest::Approx(table(m[5], true)).epsilon(1e-9));
    }
    CHECK(ticks > 0);
    CHECK(r.out.find("summary steps=" + std::to_string(ticks) + " ") != std::string::npos);
  }
}

TEST_CASE("installed binary exit codes") {
  const std::string bin = UNREALDC_CLI_PATH;
  const auto status = [&](const std::string& args) {
    const int raw = std::system((bin + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  };
  CHECK(status("--help") == 0);
  CHECK(status("train --map /no/such.map --steps 0 --out " + scratch("bin").string()) == 2);
  CHECK(status("nonsense") == 2);
}
