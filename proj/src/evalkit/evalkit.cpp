#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <thread>

#include "unrealdc/evalkit.hpp"

namespace unrealdc::evalkit {

using minidoom::Event;

EpisodeStats run_episode(arbiter::Agent& agent, minidoom::Environment& env, std::uint64_t seed,
                         const minidoom::RewardProfile& profile,
                         const std::function<void(const minidoom::WorldState&,
                                                  const arbiter::Decision&,
                                                  const minidoom::StepOutcome&)>& on_step) {
  EpisodeStats s;
  minidoom::Observation obs = env.reset(seed);
  agent.begin_episode(seed);
  bool done = false;
  while (!done) {
    const auto decision = agent.act(obs);
    auto out = env.step(decision.action, profile);
    s.kills += out.events[Event::Kill];
    s.deaths += out.events[Event::Death];
    s.objects += out.events[Event::ObjectGathered];
    s.shaped_return += out.reward;
    ++s.steps;
    if (on_step) on_step(env.state(), decision, out);
    done = out.done;
    obs = std::move(out.observation);
  }
  return s;
}

std::vector<EpisodeStats> run_episodes(const arbiter::Agent& agent, const minidoom::MapSpec& map,
                                       const minidoom::EnvConfig& env, int n,
                                       minidoom::EpisodeMode mode, std::uint64_t seed,
                                       const minidoom::RewardProfile& profile, int threads) {
  if (n < 0) throw std::invalid_argument("run_episodes: negative episode count");
  auto cfg = env;
  cfg.mode = mode;
  std::vector<EpisodeStats> out(static_cast<std::size_t>(n));
  const int t_count = std::clamp(threads, 1, std::max(n, 1));
  auto body = [&](int t) {
    auto local = agent.clone();
    minidoom::Environment e(map, cfg);
    for (int i = t; i < n; i += t_count) {
      out[static_cast<std::size_t>(i)] =
          run_episode(*local, e, seed + static_cast<std::uint64_t>(i), profile);
    }
  };
  if (t_count == 1) {
    body(0);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < t_count; ++t) pool.emplace_back(body, t);
    for (auto& th : pool) th.join();
  }
  return out;
}

ReportRow summarize(std::string map, std::string agent, std::vector<EpisodeStats> episodes) {
  ReportRow r;
  r.map = std::move(map);
  r.agent = std::move(agent);
  long k = 0, d = 0, o = 0;
  for (const auto& e : episodes) {
    k += e.kills;
    d += e.deaths;
    o += e.objects;
  }
  const double n = std::max<double>(1.0, static_cast<double>(episodes.size()));
  r.kills = static_cast<double>(k) / n;
  r.deaths = static_cast<double>(d) / n;
  r.objects = static_cast<double>(o) / n;
  r.kill_death_ratio = ratio(k, d);
  r.object_death_ratio = ratio(o, d);
  r.episodes = std::move(episodes);
  return r;
}

PValueRow test_pair(const ReportRow& a, const ReportRow& b, TTestKind kind) {
  auto column = [](const ReportRow& r, int EpisodeStats::*field) {
    std::vector<double> v;
    v.reserve(r.episodes.size());
    for (const auto& e : r.episodes) v.push_back(static_cast<double>(e.*field));
    return v;
  };
  PValueRow p;
  p.map = a.map;
  p.agent_a = a.agent;
  p.agent_b = b.agent;
  p.kills = t_test(column(a, &EpisodeStats::kills), column(b, &EpisodeStats::kills), kind);
  p.deaths = t_test(column(a, &EpisodeStats::deaths), column(b, &EpisodeStats::deaths), kind);
  p.objects = t_test(column(a, &EpisodeStats::objects), column(b, &EpisodeStats::objects), kind);
  return p;
}

EvalReport compare(const CompareRequest& req) {
  if (req.episodes < 2) throw std::invalid_argument("compare: at least 2 episodes per cell are required");
  EvalReport report;
  for (const auto& m : req.maps) {
    const std::size_t first = report.rows.size();
    for (const auto& a : req.agents) {
      auto eps = run_episodes(*a.agent, m.map, req.env, req.episodes, req.mode, req.seed,
                              minidoom::RewardProfile::action(), req.threads);
      report.rows.push_back(summarize(m.name, a.name, std::move(eps)));
    }
    for (std::size_t i = first; i < report.rows.size(); ++i) {
      for (std::size_t j = i + 1; j < report.rows.size(); ++j) {
        report.p_values.push_back(test_pair(report.rows[i], report.rows[j], req.test));
      }
    }
  }
  return report;
}

namespace {

std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

std::string pval(const TTestResult& r) { return r.p ? num(*r.p) : "NA"; }

}  // namespace

std::string means_csv(const EvalReport& report) {
  std::ostringstream os;
  os << kMeansHeader << '\n';
  for (const auto& r : report.rows) {
    os << r.map << ',' << r.agent << ',' << r.episodes.size() << ',' << num(r.kills) << ','
       << num(r.deaths) << ',' << num(r.objects) << ',' << num(r.kill_death_ratio) << ','
       << num(r.object_death_ratio) << '\n';
  }
  return os.str();
}

std::string p_values_csv(const EvalReport& report) {
  std::ostringstream os;
  os << kPValueHeader << '\n';
  for (const auto& p : report.p_values) {
    os << p.map << ',' << p.agent_a << ',' << p.agent_b << ',' << pval(p.kills) << ','
       << pval(p.deaths) << ',' << pval(p.objects) << ',' << significant(p.kills) << ','
       << significant(p.deaths) << ',' << significant(p.objects) << '\n';
  }
  return os.str();
}

std::string episodes_csv(const EvalReport& report) {
  std::ostringstream os;
  os << "map,agent,episode,kills,deaths,objects,steps,shaped_return\n";
  for (const auto& r : report.rows) {
    for (std::size_t i = 0; i < r.episodes.size(); ++i) {
      const auto& e = r.episodes[i];
      os << r.map << ',' << r.agent << ',' << i << ',' << e.kills << ',' << e.deaths << ','
         << e.objects << ',' << e.steps << ',' << num(e.shaped_return) << '\n';
    }
  }
  return os.str();
}

std::string pretty_table(const EvalReport& report) {
  std::ostringstream os;
  os << std::left << std::setw(16) << "map" << std::setw(14) << "agent" << std::right
     << std::setw(9) << "kills" << std::setw(9) << "deaths" << std::setw(9) << "objects"
     << std::setw(9) << "K/D" << std::setw(9) << "O/D" << '\n';
  os << std::fixed << std::setprecision(2);
  for (const auto& r : report.rows) {
    os << std::left << std::setw(16) << r.map << std::setw(14) << r.agent << std::right
       << std::setw(9) << r.kills << std::setw(9) << r.deaths << std::setw(9) << r.objects
       << std::setw(9) << r.kill_death_ratio << std::setw(9) << r.object_death_ratio << '\n';
  }
  if (!report.p_values.empty()) {
    os << '\n' << std::left << std::setw(16) << "map" << std::setw(26) << "pair" << std::right
       << std::setw(10) << "p_kills" << std::setw(10) << "p_deaths" << std::setw(10) << "p_objects"
       << '\n';
    os << std::setprecision(4);
    auto cell = [&](const TTestResult& t) {
      std::ostringstream c;
      if (t.p) c << std::fixed << std::setprecision(4) << *t.p << (significant(t) ? "*" : " ");
      else c << "N/A ";
      return c.str();
    };
    for (const auto& p : report.p_values) {
      os << std::left << std::setw(16) << p.map << std::setw(26) << (p.agent_a + " vs " + p.agent_b)
         << std::right << std::setw(10) << cell(p.kills) << std::setw(10) << cell(p.deaths)
         << std::setw(10) << cell(p.objects) << '\n';
    }
  }
  os << "\nRatios are total kills (or objects) / (total deaths + 1). * marks p < 0.05.\n";
  return os.str();
}

}  // namespace unrealdc::evalkit
