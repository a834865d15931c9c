#include "unrealdc/minidoom.hpp"

#include <algorithm>
#include <cstdlib>

namespace unrealdc::minidoom {

RewardProfile RewardProfile::action() {
  return {.kill = 1.0, .death = -1.0, .missed_shot = -0.02, .lost_health = -0.06,
          .object_gathered = 0.3};
}

RewardProfile RewardProfile::navigation() {
  return {.kill = 0.0, .death = -1.0, .missed_shot = 0.0, .lost_health = -0.1,
          .object_gathered = 0.5};
}

std::string_view to_string(EnvAction a) {
  switch (a) {
    case EnvAction::Fire: return "FIRE";
    case EnvAction::MoveForward: return "MOVE_FORWARD";
    case EnvAction::TurnRight: return "TURN_RIGHT";
    case EnvAction::TurnLeft: return "TURN_LEFT";
    case EnvAction::MoveBackward: return "MOVE_BACKWARD";
  }
  return "?";
}

std::string_view to_string(Event e) {
  switch (e) {
    case Event::Kill: return "kill";
    case Event::Death: return "death";
    case Event::MissedShot: return "missed_shot";
    case Event::LostHealth: return "lost_health";
    case Event::ObjectGathered: return "object_gathered";
  }
  return "?";
}

std::optional<EpisodeMode> parse_episode_mode(std::string_view s) {
  if (s == "timed") return EpisodeMode::Timed;
  if (s == "until-death") return EpisodeMode::UntilDeath;
  return std::nullopt;
}

std::string_view to_string(EpisodeMode m) {
  return m == EpisodeMode::Timed ? "timed" : "until-death";
}

Coord ahead(Coord c, Heading h, int steps) {
  switch (h) {
    case Heading::North: return {c.x, c.y - steps};
    case Heading::East: return {c.x + steps, c.y};
    case Heading::South: return {c.x, c.y + steps};
    case Heading::West: return {c.x - steps, c.y};
  }
  return c;
}

Heading turned_right(Heading h) { return static_cast<Heading>((static_cast<int>(h) + 1) % 4); }
Heading turned_left(Heading h) { return static_cast<Heading>((static_cast<int>(h) + 3) % 4); }

int EventCounts::total() const {
  int n = 0;
  for (const int c : counts) n += c;
  return n;
}

double shaped_reward(const EventCounts& events, const RewardProfile& p) {
  return events[Event::Kill] * p.kill + events[Event::Death] * p.death +
         events[Event::MissedShot] * p.missed_shot + events[Event::LostHealth] * p.lost_health +
         events[Event::ObjectGathered] * p.object_gathered;
}

Observation Observation::zeros(int height, int width) {
  return {height, width, std::vector<float>(static_cast<std::size_t>(height * width * 3), 0.0F)};
}

bool WorldState::monster_at(Coord c) const {
  return std::any_of(monsters.begin(), monsters.end(), [c](const Monster& m) { return m.cell == c; });
}

bool WorldState::object_at(Coord c) const {
  return std::binary_search(objects.begin(), objects.end(), c);
}

namespace {

int uniform_index(std::mt19937_64& rng, std::size_t n) {
  return static_cast<int>(std::uniform_int_distribution<std::size_t>(0, n - 1)(rng));
}

bool adjacent(Coord a, Coord b) { return std::abs(a.x - b.x) + std::abs(a.y - b.y) == 1; }

void place_agent(WorldState& s, const MapSpec& map) {
  std::vector<Coord> free;
  for (const auto c : map.agent_spawns) {
    if (!s.monster_at(c)) free.push_back(c);
  }
  const auto& pool = free.empty() ? map.agent_spawns : free;
  s.agent = pool[static_cast<std::size_t>(uniform_index(s.rng, pool.size()))];
  s.heading = static_cast<Heading>(uniform_index(s.rng, 4));
}

bool open_for_monster(const WorldState& s, const MapSpec& map, Coord c) {
  return map.is_floor(c) && c != s.agent && !s.monster_at(c);
}

void move_monster(WorldState& s, const MapSpec& map, std::size_t index, double chase_prob) {
  static constexpr std::array<Heading, 4> kDirs{Heading::North, Heading::East, Heading::South,
                                                Heading::West};
  const Coord from = s.monsters[index].cell;
  const double r = std::uniform_real_distribution<double>(0.0, 1.0)(s.rng);
  Coord target = from;
  if (r < chase_prob) {
    std::vector<Coord> closer;
    const int dist = std::abs(from.x - s.agent.x) + std::abs(from.y - s.agent.y);
    for (const auto h : kDirs) {
      const Coord c = ahead(from, h);
      if (std::abs(c.x - s.agent.x) + std::abs(c.y - s.agent.y) < dist &&
          open_for_monster(s, map, c)) {
        closer.push_back(c);
      }
    }
    if (!closer.empty()) target = closer[static_cast<std::size_t>(uniform_index(s.rng, closer.size()))];
  } else {
    const Coord c = ahead(from, kDirs[static_cast<std::size_t>(uniform_index(s.rng, 4))]);
    if (open_for_monster(s, map, c)) target = c;
  }
  s.monsters[index].cell = target;
}

}  // namespace

WorldState reset_state(const MapSpec& map, const EnvConfig& config, std::uint64_t seed) {
  WorldState s;
  s.rng.seed(seed);
  s.max_health = config.max_health;
  s.health = config.max_health;
  s.step_limit = config.step_limit.value_or(map.episode_step_limit);
  for (const auto c : map.monster_spawns) {
    s.monsters.push_back({c, config.monster_health, config.monster_cooldown});
  }
  s.objects = map.object_spawns;
  std::sort(s.objects.begin(), s.objects.end());
  s.objects.erase(std::unique(s.objects.begin(), s.objects.end()), s.objects.end());
  place_agent(s, map);
  return s;
}

StepOutcome step(WorldState& s, const MapSpec& map, const EnvConfig& config, EnvAction action,
                 const RewardProfile& profile) {
  if (s.terminal) throw ContractViolation("step called on a terminal state");
  EventCounts events;
  ++s.tick;
  if (s.fire_cooldown > 0) --s.fire_cooldown;

  switch (action) {
    case EnvAction::Fire: {
      if (s.fire_cooldown > 0) break;
      s.fire_cooldown = config.fire_cooldown;
      bool hit = false;
      for (Coord c = ahead(s.agent, s.heading); map.is_floor(c); c = ahead(c, s.heading)) {
        auto it = std::find_if(s.monsters.begin(), s.monsters.end(),
                               [c](const Monster& m) { return m.cell == c; });
        if (it != s.monsters.end()) {
          hit = true;
          if (--it->health <= 0) {
            s.monsters.erase(it);
            ++events[Event::Kill];
          }
          break;
        }
      }
      if (!hit) ++events[Event::MissedShot];
      break;
    }
    case EnvAction::MoveForward:
    case EnvAction::MoveBackward: {
      const Coord target = ahead(s.agent, s.heading, action == EnvAction::MoveForward ? 1 : -1);
      if (map.is_floor(target) && !s.monster_at(target)) {
        s.agent = target;
        auto it = std::lower_bound(s.objects.begin(), s.objects.end(), target);
        if (it != s.objects.end() && *it == target) {
          s.objects.erase(it);
          ++events[Event::ObjectGathered];
        }
      }
      break;
    }
    case EnvAction::TurnRight: s.heading = turned_right(s.heading); break;
    case EnvAction::TurnLeft: s.heading = turned_left(s.heading); break;
  }

  for (std::size_t i = 0; i < s.monsters.size(); ++i) {
    auto& m = s.monsters[i];
    if (m.cooldown > 0) --m.cooldown;
    if (adjacent(m.cell, s.agent)) {
      if (m.cooldown == 0 && s.health > 0) {
        s.health = std::max(0, s.health - config.monster_damage);
        m.cooldown = config.monster_cooldown;
        ++events[Event::LostHealth];
      }
    } else {
      move_monster(s, map, i, config.monster_chase_prob);
    }
  }

  if (s.health == 0) {
    ++events[Event::Death];
    if (config.mode == EpisodeMode::UntilDeath) {
      s.terminal = true;
    } else {
      s.health = s.max_health;
      place_agent(s, map);
    }
  }
  if (s.tick >= s.step_limit) s.terminal = true;
  if (config.end_when_cleared && s.monsters.empty() && s.objects.empty()) s.terminal = true;

  StepOutcome out;
  out.events = events;
  out.reward = shaped_reward(events, profile);
  out.done = s.terminal;
  out.observation = render(s, map, config.obs_height, config.obs_width, config.fov_degrees);
  return out;
}

std::string ascii_view(const WorldState& s, const MapSpec& map) {
  std::string out;
  for (int y = 0; y < map.height; ++y) {
    for (int x = 0; x < map.width; ++x) {
      const Coord c{x, y};
      char ch = map.at(c) == Cell::Wall ? '#' : '.';
      if (s.object_at(c)) ch = 'O';
      if (s.monster_at(c)) ch = 'M';
      if (c == s.agent) ch = "^>v<"[static_cast<int>(s.heading)];
      out.push_back(ch);
    }
    out.push_back('\n');
  }
  return out;
}

Environment::Environment(MapSpec map, EnvConfig config)
    : map_(std::move(map)), config_(config), state_(reset_state(map_, config_, 0)) {}

Observation Environment::reset(std::uint64_t seed) {
  state_ = reset_state(map_, config_, seed);
  return observe();
}

StepOutcome Environment::step(EnvAction action, const RewardProfile& profile) {
  return minidoom::step(state_, map_, config_, action, profile);
}

Observation Environment::observe() const {
  return render(state_, map_, config_.obs_height, config_.obs_width, config_.fov_degrees);
}

}  // namespace unrealdc::minidoom
