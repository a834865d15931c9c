#pragma once

// MiniDoom: a small deterministic grid shooter. The agent lives on a walled
// grid, faces one of four headings, and sees a column-raycast RGB view.

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace unrealdc::minidoom {

enum class Cell : std::uint8_t { Wall, Floor };

struct Coord {
  int x = 0;
  int y = 0;
  auto operator<=>(const Coord&) const = default;
};

struct MapSpec {
  int width = 0;
  int height = 0;
  std::vector<Cell> cells;  // row-major
  std::vector<Coord> agent_spawns;
  std::vector<Coord> monster_spawns;
  std::vector<Coord> object_spawns;
  int episode_step_limit = 2100;

  Cell at(Coord c) const { return cells[static_cast<std::size_t>(c.y * width + c.x)]; }
  bool in_bounds(Coord c) const { return c.x >= 0 && c.y >= 0 && c.x < width && c.y < height; }
  bool is_floor(Coord c) const { return in_bounds(c) && at(c) == Cell::Floor; }
};

class MapParseError : public std::runtime_error {
 public:
  MapParseError(const std::string& what, int line, int column);
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

/// Parses the character grid format ('#' wall, '.' floor, 'S' agent spawn,
/// 'M' monster spawn, 'O' object spawn). Lines and columns in errors are
/// 1-based.
MapSpec load_map(std::string_view text);
MapSpec load_map_file(const std::filesystem::path& path);
std::string map_to_text(const MapSpec& map);

struct RewardProfile {
  double kill = 0.0;
  double death = 0.0;
  double missed_shot = 0.0;
  double lost_health = 0.0;
  double object_gathered = 0.0;

  static RewardProfile action();
  static RewardProfile navigation();
};

enum class EnvAction : std::uint8_t { Fire, MoveForward, TurnRight, TurnLeft, MoveBackward };

inline constexpr std::array<EnvAction, 5> kActionAgentActions{
    EnvAction::Fire, EnvAction::MoveForward, EnvAction::TurnRight, EnvAction::TurnLeft,
    EnvAction::MoveBackward};
inline constexpr std::array<EnvAction, 3> kNavigationAgentActions{
    EnvAction::MoveForward, EnvAction::TurnRight, EnvAction::TurnLeft};

std::string_view to_string(EnvAction a);

enum class Heading : std::uint8_t { North, East, South, West };

Coord ahead(Coord c, Heading h, int steps = 1);
Heading turned_right(Heading h);
Heading turned_left(Heading h);

enum class Event : std::uint8_t { Kill, Death, MissedShot, LostHealth, ObjectGathered };
inline constexpr std::size_t kEventKinds = 5;
std::string_view to_string(Event e);

/// Multiset of events produced by one step.
struct EventCounts {
  std::array<int, kEventKinds> counts{};

  int& operator[](Event e) { return counts[static_cast<std::size_t>(e)]; }
  int operator[](Event e) const { return counts[static_cast<std::size_t>(e)]; }
  int total() const;
  bool operator==(const EventCounts&) const = default;
};

/// Event-weighted sum under a profile.
double shaped_reward(const EventCounts& events, const RewardProfile& profile);

struct Observation {
  int height = 0;
  int width = 0;
  std::vector<float> pixels;  // height x width x 3, values in [0,1]

  static Observation zeros(int height, int width);
  float at(int y, int x, int c) const {
    return pixels[static_cast<std::size_t>((y * width + x) * 3 + c)];
  }
  bool operator==(const Observation&) const = default;
};

enum class EpisodeMode { Timed, UntilDeath };
std::optional<EpisodeMode> parse_episode_mode(std::string_view s);
std::string_view to_string(EpisodeMode m);

struct EnvConfig {
  int max_health = 100;
  int monster_health = 1;
  int monster_damage = 10;
  int monster_cooldown = 3;
  int fire_cooldown = 1;
  double monster_chase_prob = 0.5;
  EpisodeMode mode = EpisodeMode::Timed;
  std::optional<int> step_limit;  // overrides MapSpec::episode_step_limit
  bool end_when_cleared = false;  // terminate once no monsters and no objects remain
  int obs_height = 84;
  int obs_width = 84;
  double fov_degrees = 90.0;
};

struct Monster {
  Coord cell;
  int health = 1;
  int cooldown = 0;
  bool operator==(const Monster&) const = default;
};

struct WorldState {
  Coord agent;
  Heading heading = Heading::North;
  int health = 0;
  int max_health = 0;
  std::vector<Monster> monsters;
  std::vector<Coord> objects;  // sorted
  int tick = 0;
  int step_limit = 0;
  int fire_cooldown = 0;
  bool terminal = false;
  std::mt19937_64 rng;

  bool operator==(const WorldState&) const = default;
  bool monster_at(Coord c) const;
  bool object_at(Coord c) const;
};

struct StepOutcome {
  Observation observation;
  double reward = 0.0;
  bool done = false;
  EventCounts events;
};

class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Fresh episode: agent placed at a seeded spawn with a seeded heading.
WorldState reset_state(const MapSpec& map, const EnvConfig& config, std::uint64_t seed);

/// Advances one tick. Throws ContractViolation on a terminal state.
StepOutcome step(WorldState& state, const MapSpec& map, const EnvConfig& config, EnvAction action,
                 const RewardProfile& profile);

/// First-person column raycast. Throws std::invalid_argument for non-positive dims.
Observation render(const WorldState& state, const MapSpec& map, int height, int width,
                   double fov_degrees = 90.0);

/// Top-down text view: '#' wall, '.' floor, 'M' monster, 'O' object and the
/// agent as one of '^', '>', 'v', '<'.
std::string ascii_view(const WorldState& state, const MapSpec& map);

namespace palette {
inline constexpr std::array<float, 3> kCeiling{0.20F, 0.20F, 0.20F};
inline constexpr std::array<float, 3> kFloor{0.45F, 0.35F, 0.25F};
inline constexpr std::array<float, 3> kWall{0.60F, 0.60F, 0.60F};
inline constexpr std::array<float, 3> kMonster{0.90F, 0.10F, 0.10F};
inline constexpr std::array<float, 3> kObject{0.10F, 0.80F, 0.20F};
}  // namespace palette

/// Convenience owner of map, config and live state.
class Environment {
 public:
  Environment(MapSpec map, EnvConfig config);

  Observation reset(std::uint64_t seed);
  StepOutcome step(EnvAction action, const RewardProfile& profile);
  Observation observe() const;

  const MapSpec& map() const { return map_; }
  const EnvConfig& config() const { return config_; }
  const WorldState& state() const { return state_; }
  WorldState& mutable_state() { return state_; }

 private:
  MapSpec map_;
  EnvConfig config_;
  WorldState state_;
};

}  // namespace unrealdc::minidoom
