#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "support/scenarios.hpp"
#include "unrealdc/minidoom.hpp"

using namespace unrealdc::minidoom;

namespace {

MapParseError parse_error(std::string_view text) {
  try {
    load_map(text);
  } catch (const MapParseError& e) {
    return e;
  }
  FAIL("map parsed without error");
  return MapParseError("", 0, 0);
}

}  // namespace

TEST_CASE("minimal map") {
  const auto m = load_map("###\n#S#\n###\n");
  CHECK(m.width == 3);
  CHECK(m.height == 3);
  REQUIRE(m.agent_spawns.size() == 1);
  CHECK(m.agent_spawns[0] == Coord{1, 1});
  CHECK(m.monster_spawns.empty());
  CHECK(m.object_spawns.empty());
}

TEST_CASE("spawn cells are registered") {
  const auto m = load_map("#####\n#SMO#\n#O..#\n#####\n");
  CHECK(m.monster_spawns == std::vector<Coord>{{2, 1}});
  CHECK(m.object_spawns == std::vector<Coord>{{3, 1}, {1, 2}});
  CHECK(m.is_floor({2, 1}));
  CHECK_FALSE(m.is_floor({0, 0}));
  CHECK(load_map(map_to_text(m)).object_spawns == m.object_spawns);
}

TEST_CASE("map parse errors carry a position") {
  SUBCASE("unwalled border") {
    const auto e = parse_error("###\n#S.\n###\n");
    CHECK(std::string(e.what()).find("unwalled border") != std::string::npos);
    CHECK(e.line() == 2);
    CHECK(e.column() == 3);
  }
  SUBCASE("non-rectangular") {
    const auto e = parse_error("###\n#S##\n###\n");
    CHECK(std::string(e.what()).find("non-rectangular") != std::string::npos);
    CHECK(e.line() == 2);
  }
  SUBCASE("unknown character") {
    const auto e = parse_error("###\n#X#\n###\n");
    CHECK(e.line() == 2);
    CHECK(e.column() == 2);
  }
  SUBCASE("no spawn") { parse_error("###\n#.#\n###\n"); }
}

TEST_CASE("reset is deterministic in the seed") {
  const auto map = load_map_file(std::string(UNREALDC_SOURCE_DIR) + "/maps/heldout.map");
  EnvConfig cfg;
  cfg.obs_height = cfg.obs_width = 16;
  Environment a(map, cfg), b(map, cfg);
  CHECK(a.reset(7) == b.reset(7));
  CHECK(a.state() == b.state());
  CHECK(a.state().objects.size() == map.object_spawns.size());
  CHECK(a.state().monsters.size() == map.monster_spawns.size());

  std::set<std::pair<int, int>> spawns;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto s = reset_state(map, cfg, seed);
    spawns.insert({s.agent.x, s.agent.y});
  }
  CHECK(spawns.size() > 1);
}

TEST_CASE("a single spawn forces the agent's cell") {
  const auto& map = support::open_room();
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    CHECK(reset_state(map, support::small_env(), seed).agent == Coord{1, 1});
  }
}

TEST_CASE("table rewards from hand-placed scenarios") {
  const auto& map = support::open_room();
  const auto cfg = support::small_env();

  SUBCASE("kill") {
    auto s = support::empty_state(map, cfg, {1, 1}, Heading::East);
    s.monsters.push_back({{5, 1}, 1, 3});
    const auto out = step(s, map, cfg, EnvAction::Fire, RewardProfile::action());
    CHECK(out.events[Event::Kill] == 1);
    CHECK(out.events.total() == 1);
    CHECK(out.reward == support::kActionTable.kill);
    CHECK(s.monsters.empty());
  }
  SUBCASE("object gathered") {
    auto s = support::empty_state(map, cfg, {1, 1}, Heading::South);
    s.objects = {{1, 2}};
    const auto out = step(s, map, cfg, EnvAction::MoveForward, RewardProfile::navigation());
    CHECK(out.reward == support::kNavigationTable.object_gathered);
    CHECK(s.agent == Coord{1, 2});
    CHECK(s.objects.empty());
  }
  SUBCASE("missed shot then hit") {
    auto s = support::empty_state(map, cfg, {1, 1}, Heading::East);
    s.monsters.push_back({{1, 2}, 1, 1});
    const auto out = step(s, map, cfg, EnvAction::Fire, RewardProfile::action());
    CHECK(out.events[Event::MissedShot] == 1);
    CHECK(out.events[Event::LostHealth] == 1);
    CHECK(out.reward == doctest::Approx(-0.08).epsilon(1e-12));
    CHECK(s.health == cfg.max_health - cfg.monster_damage);
  }
  SUBCASE("walls block movement") {
    auto s = support::empty_state(map, cfg, {1, 1}, Heading::North);
    const auto out = step(s, map, cfg, EnvAction::MoveForward, RewardProfile::action());
    CHECK(s.agent == Coord{1, 1});
    CHECK(out.events.total() == 0);
  }
  SUBCASE("second shot inside the cooldown does nothing") {
    auto c2 = cfg;
    c2.fire_cooldown = 3;
    auto s = support::empty_state(map, c2, {1, 1}, Heading::East);
    step(s, map, c2, EnvAction::Fire, RewardProfile::action());
    const auto out = step(s, map, c2, EnvAction::Fire, RewardProfile::action());
    CHECK(out.events[Event::MissedShot] == 0);
  }
}

TEST_CASE("until-death ends at death, timed respawns") {
  const auto& map = support::open_room();
  for (const auto mode : {EpisodeMode::UntilDeath, EpisodeMode::Timed}) {
    auto cfg = support::small_env(mode);
    cfg.monster_damage = cfg.max_health;
    auto s = support::empty_state(map, cfg, {1, 1}, Heading::North);
    s.monsters.push_back({{2, 1}, 1, 0});
    const auto out = step(s, map, cfg, EnvAction::TurnLeft, RewardProfile::action());
    CHECK(out.events[Event::Death] == 1);
    CHECK(out.reward == doctest::Approx(-1.06).epsilon(1e-12));
    if (mode == EpisodeMode::UntilDeath) {
      CHECK(out.done);
      CHECK_THROWS_AS(step(s, map, cfg, EnvAction::Fire, RewardProfile::action()), ContractViolation);
    } else {
      CHECK_FALSE(out.done);
      CHECK(s.health == s.max_health);
    }
  }
}

TEST_CASE("step limit and cleared map end the episode") {
  const auto& map = support::open_room();
  auto cfg = support::small_env(EpisodeMode::Timed);
  cfg.step_limit = 3;
  auto s = reset_state(map, cfg, 0);
  CHECK_FALSE(step(s, map, cfg, EnvAction::TurnLeft, RewardProfile::action()).done);
  CHECK_FALSE(step(s, map, cfg, EnvAction::TurnLeft, RewardProfile::action()).done);
  CHECK(step(s, map, cfg, EnvAction::TurnLeft, RewardProfile::action()).done);

  cfg.step_limit.reset();
  cfg.end_when_cleared = true;
  auto c = support::empty_state(map, cfg, {1, 1}, Heading::East);
  c.objects = {{2, 1}};
  CHECK(step(c, map, cfg, EnvAction::MoveForward, RewardProfile::action()).done);
}

TEST_CASE("rendering") {
  const auto& map = support::open_room();
  const auto cfg = support::small_env();
  auto s = support::empty_state(map, cfg, {1, 1}, Heading::East);
  s.monsters.push_back({{4, 1}, 1, 3});

  CHECK(render(s, map, 12, 12) == render(s, map, 12, 12));
  CHECK_THROWS_AS(render(s, map, 0, 12), std::invalid_argument);

  const auto before = render(s, map, 12, 12);
  step(s, map, cfg, EnvAction::Fire, RewardProfile::action());
  REQUIRE(s.monsters.empty());
  CHECK(s.tick == 1);
  CHECK(render(s, map, 12, 12) != before);

  const auto box = load_map("###\n#S#\n###\n");
  for (int h = 0; h < 4; ++h) {
    auto w = support::empty_state(box, cfg, {1, 1}, static_cast<Heading>(h));
    const auto obs = render(w, box, 9, 9);
    for (std::size_t i = 0; i < obs.pixels.size(); ++i) {
      CHECK(obs.pixels[i] == palette::kWall[i % 3]);
    }
  }
}

TEST_CASE("random play keeps the world consistent") {
  const auto map = load_map_file(std::string(UNREALDC_SOURCE_DIR) + "/maps/heldout.map");
  EnvConfig cfg;
  cfg.obs_height = cfg.obs_width = 8;
  cfg.mode = EpisodeMode::Timed;
  cfg.step_limit = 400;
  std::mt19937_64 rng(3);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Environment env(map, cfg);
    env.reset(seed);
    bool done = false;
    while (!done) {
      const auto a = kActionAgentActions[rng() % kActionAgentActions.size()];
      const auto out = env.step(a, RewardProfile::action());
      done = out.done;
      const auto& s = env.state();
      CHECK(out.reward == shaped_reward(out.events, RewardProfile::action()));
      REQUIRE(map.is_floor(s.agent));
      REQUIRE(s.health > 0);
      REQUIRE(s.health <= s.max_health);
      REQUIRE(std::is_sorted(s.objects.begin(), s.objects.end()));
      for (const auto& m : s.monsters) {
        REQUIRE(map.is_floor(m.cell));
        REQUIRE(m.cell != s.agent);
      }
      for (const float p : out.observation.pixels) REQUIRE((p >= 0.0F && p <= 1.0F));
    }
    CHECK(env.state().tick == 400);
  }
}
