#pragma once

// Evaluation episodes, kill/death/object metrics and two-sample t-tests.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "unrealdc/arbiter.hpp"
#include "unrealdc/minidoom.hpp"

namespace unrealdc::evalkit {

struct EpisodeStats {
  int kills = 0;
  int deaths = 0;
  int objects = 0;
  int steps = 0;
  double shaped_return = 0.0;
  bool operator==(const EpisodeStats&) const = default;
};

/// Episodes use seeds seed, seed+1, ..., seed+n-1 for both the environment
/// and the agent. `env.mode` is replaced by `mode`. With threads > 1 the
/// agent is cloned per thread; results are ordered by seed either way.
std::vector<EpisodeStats> run_episodes(const arbiter::Agent& agent, const minidoom::MapSpec& map,
                                       const minidoom::EnvConfig& env, int n,
                                       minidoom::EpisodeMode mode, std::uint64_t seed,
                                       const minidoom::RewardProfile& profile =
                                           minidoom::RewardProfile::action(),
                                       int threads = 1);

/// Single episode; `on_step` (if set) sees every decision and outcome.
EpisodeStats run_episode(arbiter::Agent& agent, minidoom::Environment& env, std::uint64_t seed,
                         const minidoom::RewardProfile& profile,
                         const std::function<void(const minidoom::WorldState&,
                                                  const arbiter::Decision&,
                                                  const minidoom::StepOutcome&)>& on_step = {});

/// sum(numerator) / (sum(denominator) + 1).
double ratio(long numerator, long denominator);
double ratio(std::span<const int> numerator, std::span<const int> denominator);

enum class TTestKind { Welch, Student };

struct TTestResult {
  double t = 0.0;   // NaN when undefined
  double df = 0.0;
  std::optional<double> p;  // two-tailed; absent (NA) when both variances are zero
};

/// Two-sample two-tailed t-test. Throws std::invalid_argument if either
/// sample has fewer than 2 values. Input order does not affect the result.
TTestResult t_test(std::span<const double> a, std::span<const double> b,
                   TTestKind kind = TTestKind::Welch);
inline TTestResult welch_t_test(std::span<const double> a, std::span<const double> b) {
  return t_test(a, b, TTestKind::Welch);
}

inline constexpr double kSignificance = 0.05;
inline bool significant(const TTestResult& r) { return r.p && *r.p < kSignificance; }

struct AgentSpec {
  std::string name;
  std::shared_ptr<const arbiter::Agent> agent;
};

struct MapEntry {
  std::string name;
  minidoom::MapSpec map;
};

struct CompareRequest {
  std::vector<AgentSpec> agents;
  std::vector<MapEntry> maps;
  int episodes = 30;
  minidoom::EpisodeMode mode = minidoom::EpisodeMode::Timed;
  minidoom::EnvConfig env;
  std::uint64_t seed = 1;
  TTestKind test = TTestKind::Welch;
  int threads = 1;
};

struct ReportRow {
  std::string map;
  std::string agent;
  std::vector<EpisodeStats> episodes;
  double kills = 0.0;  // per-episode means
  double deaths = 0.0;
  double objects = 0.0;
  double kill_death_ratio = 0.0;
  double object_death_ratio = 0.0;
};

struct PValueRow {
  std::string map;
  std::string agent_a;
  std::string agent_b;
  TTestResult kills;
  TTestResult deaths;
  TTestResult objects;
};

struct EvalReport {
  std::vector<ReportRow> rows;        // |agents| x |maps|, map-major
  std::vector<PValueRow> p_values;    // every agent pair per map
};

/// Summarises episodes into a report row.
ReportRow summarize(std::string map, std::string agent, std::vector<EpisodeStats> episodes);
PValueRow test_pair(const ReportRow& a, const ReportRow& b, TTestKind kind = TTestKind::Welch);

EvalReport compare(const CompareRequest& request);

inline constexpr std::string_view kMeansHeader =
    "map,agent,episodes,kills,deaths,objects,kill_death_ratio,object_death_ratio";
inline constexpr std::string_view kPValueHeader =
    "map,agent_a,agent_b,p_kills,p_deaths,p_objects,sig_kills,sig_deaths,sig_objects";

std::string means_csv(const EvalReport& report);
std::string p_values_csv(const EvalReport& report);
std::string episodes_csv(const EvalReport& report);
std::string pretty_table(const EvalReport& report);

}  // namespace unrealdc::evalkit
