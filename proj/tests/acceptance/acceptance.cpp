// Acceptance suite: one line per criterion, exit status 0 iff all pass.
// Usage: acceptance [criterion ids...]   (default: all)

#include <boost/math/distributions/chi_squared.hpp>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>

#include "../data/welch_reference.hpp"
#include "../support/gradcheck.hpp"
#include "../support/scenarios.hpp"
#include "unrealdc/arbiter.hpp"
#include "unrealdc/evalkit.hpp"
#include "unrealdc/losses.hpp"
#include "unrealdc/replay.hpp"
#include "unrealdc/trainer.hpp"

namespace fs = std::filesystem;
using namespace unrealdc;

namespace {

// Pinned tolerances and budgets.
constexpr double kGradRelTol = 1e-4;
constexpr double kGradStep = 1e-5;
constexpr double kGradFloor = 1e-5;  // FD rounding noise is ~1e-10 absolute
constexpr double kGradMaxSeconds = 300.0;
constexpr double kIdentityTol = 1e-12;
constexpr int kRpBatches = 10'000;
constexpr int kUniformDraws = 100'000;
constexpr double kChiSquareMinP = 0.01;
constexpr int kRouteFuzz = 10'000;
constexpr std::int64_t kDeterminismSteps = 10'000;
constexpr std::int64_t kAsyncUpdates = 10'000;
constexpr int kAsyncWorkers = 4;
constexpr std::int64_t kLearningBudget = 500'000;
constexpr int kLearningEpisodes = 100;
constexpr double kNavSuccess = 0.90;
constexpr double kKillDeathFactor = 3.0;
constexpr int kCompareEpisodes = 30;
constexpr double kCompareP = 0.05;
constexpr int kReferencePairs = 50;
constexpr double kReferenceTol = 1e-6;
constexpr std::uint64_t kEvalSeed = 100'000;

const fs::path kSource = UNREALDC_SOURCE_DIR;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os << std::setprecision(prec) << v;
  return os.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("unrealdc_acceptance_" + name);
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

trainer::TrainConfig desk_config(const std::string& name) {
  auto c = trainer::load_train_config(kSource / "configs" / (name + ".ini"));
  if (c.total_steps > kLearningBudget) c.total_steps = kLearningBudget;
  return c;
}

// Trained agents are shared between criteria 9 and 10.
std::map<std::string, netcore::Parameters<float>>& trained_cache() {
  static std::map<std::string, netcore::Parameters<float>> cache;
  return cache;
}

const netcore::Parameters<float>& trained(const std::string& name, std::string* note = nullptr) {
  auto& cache = trained_cache();
  auto it = cache.find(name);
  if (it == cache.end()) {
    const auto cfg = desk_config(name);
    const auto t0 = std::chrono::steady_clock::now();
    auto r = trainer::train(cfg);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    for (const auto& w : r.workers) {
      if (!w.error.empty()) throw std::runtime_error("worker aborted: " + w.error);
    }
    if (!r.params.all_finite()) throw std::runtime_error(name + ": non-finite parameters after training");
    std::cerr << "  trained " << name << ": " << r.global_steps << " steps in " << fmt(secs, 3)
              << " s\n";
    it = cache.emplace(name, std::move(r.params)).first;
  }
  if (note) *note = name;
  return it->second;
}

netcore::Parameters<float> untrained(const std::string& name) {
  auto cfg = desk_config(name);
  cfg.total_steps = 0;
  return trainer::train(cfg).params;
}

// ---------------------------------------------------------------------------

Outcome criterion_gradients() {
  using support::Head;
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  std::string parts;
  bool ok = true;
  for (const Head h : {Head::Policy, Head::Value, Head::ValueReplay, Head::RewardPrediction,
                       Head::PixelControl}) {
    const auto r = support::check_head(h, 0, kGradStep, kGradFloor);
    worst = std::max(worst, r.max_rel_error);
    ok = ok && r.max_rel_error < kGradRelTol;
    parts += std::string(support::head_name(h)) + "=" + fmt(r.max_rel_error, 2) + " ";
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  ok = ok && secs < kGradMaxSeconds;
  return {ok, "max rel error " + parts + "(< " + fmt(kGradRelTol) + "), " + fmt(secs, 3) + " s"};
}

Outcome criterion_loss_identities() {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  int failures = 0;
  double worst_linear = 0.0;

  for (int trial = 0; trial < 1000; ++trial) {
    // value_loss and vr_loss on the same rollout.
    losses::Rollout ro;
    const int n = 1 + static_cast<int>(u01(rng) * 20);
    std::vector<double> values;
    for (int t = 0; t < n; ++t) {
      ro.frames.push_back(minidoom::Observation::zeros(2, 2));
      ro.actions.push_back(0);
      ro.rewards.push_back(n01(rng));
      ro.dones.push_back(t == n - 1 && trial % 2 == 0);
      values.push_back(n01(rng));
    }
    if (!ro.dones.back()) ro.bootstrap = n01(rng);
    const double gamma = u01(rng);
    const auto returns = losses::n_step_returns(ro, gamma);
    if (losses::value_loss(returns, values) != losses::vr_loss(ro, gamma, values)) ++failures;

    // reward prediction depends on the sign only.
    const std::array<double, 3> logits{3 * n01(rng), 3 * n01(rng), 3 * n01(rng)};
    double r = n01(rng);
    if (r == 0.0) r = 0.5;
    if (losses::rp_loss(logits, r) != losses::rp_loss(logits, 1000.0 * r)) ++failures;

    // pixel-change pseudo reward: zero on identical frames, symmetric.
    minidoom::Observation f1 = minidoom::Observation::zeros(8, 8);
    minidoom::Observation f2 = minidoom::Observation::zeros(8, 8);
    for (auto& v : f1.pixels) v = static_cast<float>(u01(rng));
    for (auto& v : f2.pixels) v = static_cast<float>(u01(rng));
    for (const double v : losses::pc_pseudo_reward(f1, f1, 4, 4)) failures += v != 0.0;
    if (losses::pc_pseudo_reward(f1, f2, 4, 4) != losses::pc_pseudo_reward(f2, f1, 4, 4)) ++failures;

    // total_loss is linear in each lambda.
    losses::LossComponents c{n01(rng), n01(rng), n01(rng), n01(rng), n01(rng)};
    losses::LossWeights w;
    w.lambda_vr = u01(rng);
    w.lambda_rp = u01(rng);
    w.lambda_pc = u01(rng);
    const double base = losses::total_loss(c, w);
    const double d = u01(rng);
    auto bumped = [&](double losses::LossWeights::*field, double comp) {
      auto w2 = w;
      w2.*field += d;
      return std::abs(losses::total_loss(c, w2) - base - d * comp);
    };
    worst_linear = std::max({worst_linear, bumped(&losses::LossWeights::lambda_vr, c.vr),
                             bumped(&losses::LossWeights::lambda_rp, c.rp),
                             bumped(&losses::LossWeights::lambda_pc, c.pc)});
  }
  const bool ok = failures == 0 && worst_linear <= kIdentityTol;
  return {ok, std::to_string(failures) + " exact-identity failures over 1000 trials; linearity error " +
                  fmt(worst_linear, 3)};
}

Outcome criterion_reward_shaping() {
  int total = 0, matched = 0;
  for (const bool action : {true, false}) {
    const auto profile = action ? minidoom::RewardProfile::action() : minidoom::RewardProfile::navigation();
    const auto& table = action ? support::kActionTable : support::kNavigationTable;
    const std::array<double, 5> weights{table.kill, table.death, table.missed_shot, table.lost_health,
                                        table.object_gathered};
    for (int code = 0; code < 243; ++code) {
      minidoom::EventCounts ev;
      int rest = code;
      double expected = 0.0;
      int nonzero_kinds = 0;
      for (std::size_t k = 0; k < 5; ++k) {
        ev.counts[k] = rest % 3;
        rest /= 3;
        expected += ev.counts[k] * weights[k];
        nonzero_kinds += ev.counts[k] > 0;
      }
      const double got = minidoom::shaped_reward(ev, profile);
      // Single-kind combinations must be bit-exact; sums may differ by rounding order.
      const bool ok = nonzero_kinds <= 1 ? got == expected : std::abs(got - expected) <= 1e-12;
      ++total;
      matched += ok;
    }
  }
  // Simulator-level checks of the same weights.
  const auto& map = support::open_room();
  auto cfg = support::small_env();
  int sim_ok = 0;
  {
    auto s = support::empty_state(map, cfg, {1, 1}, minidoom::Heading::East);
    s.monsters.push_back({{4, 1}, 1, 3});
    const auto out = minidoom::step(s, map, cfg, minidoom::EnvAction::Fire,
                                    minidoom::RewardProfile::action());
    sim_ok += out.events[minidoom::Event::Kill] == 1 && out.reward == 1.0;
  }
  {
    auto s = support::empty_state(map, cfg, {1, 1}, minidoom::Heading::East);
    s.objects = {{2, 1}};
    const auto out = minidoom::step(s, map, cfg, minidoom::EnvAction::MoveForward,
                                    minidoom::RewardProfile::navigation());
    sim_ok += out.reward == 0.5;
  }
  {
    auto s = support::empty_state(map, cfg, {1, 1}, minidoom::Heading::East);
    s.monsters.push_back({{1, 2}, 1, 1});
    const auto out = minidoom::step(s, map, cfg, minidoom::EnvAction::Fire,
                                    minidoom::RewardProfile::action());
    sim_ok += out.events[minidoom::Event::MissedShot] == 1 &&
              out.events[minidoom::Event::LostHealth] == 1 && std::abs(out.reward + 0.08) < 1e-15;
  }
  const bool ok = matched == total && sim_ok == 3;
  return {ok, std::to_string(matched) + "/" + std::to_string(total) + " event combinations, " +
                  std::to_string(sim_ok) + "/3 simulator scenarios"};
}

Outcome criterion_samplers() {
  std::mt19937_64 rng(4);
  // A buffer spanning several episodes with mixed rewards.
  replay::ReplayBuffer buf(500);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::array<double, 4> nonzero{1.0, -1.0, 0.3, -0.02};
  for (int i = 0; i < 700; ++i) {
    replay::Transition t;
    t.observation = minidoom::Observation::zeros(2, 2);
    t.observation.pixels[0] = static_cast<float>(i % 97) / 97.0F;
    t.reward = u(rng) < 0.9 ? 0.0 : nonzero[static_cast<std::size_t>(i) % 4];
    t.done = i % 37 == 36;
    buf.push(t);
  }
  int bad_batches = 0;
  for (int b = 0; b < kRpBatches; ++b) {
    const std::size_t size = 1 + static_cast<std::size_t>(b % 8);
    const auto batch = replay::sample_rp_batch(buf, size, rng);
    std::size_t zeros = 0;
    for (const auto& s : batch) zeros += s.reward == 0.0;
    if (batch.size() != size || zeros != (size + 1) / 2) ++bad_batches;
  }

  // Exactly 10 valid starts: 10 + length - 1 entries, no done flags.
  const std::size_t length = 20;
  replay::ReplayBuffer seq(64);
  for (std::size_t i = 0; i < length + 9; ++i) {
    replay::Transition t;
    t.observation = minidoom::Observation::zeros(2, 2);
    seq.push(t);
  }
  std::array<long, 10> counts{};
  for (int i = 0; i < kUniformDraws; ++i) ++counts[replay::sample_sequence_start(seq, length, rng)];
  const double expected = kUniformDraws / 10.0;
  double chi2 = 0.0;
  for (const long c : counts) chi2 += (c - expected) * (c - expected) / expected;
  const double p = boost::math::cdf(boost::math::complement(boost::math::chi_squared(9.0), chi2));
  const bool ok = bad_batches == 0 && p > kChiSquareMinP;
  return {ok, std::to_string(bad_batches) + "/" + std::to_string(kRpBatches) +
                  " unbalanced RP batches; uniform start chi2=" + fmt(chi2) + " p=" + fmt(p) +
                  " (> " + fmt(kChiSquareMinP) + ")"};
}

// Independent statement of the routing rule.
arbiter::AgentChoice expected_route(const std::array<double, 3>& z) {
  const double mx = std::max({z[0], z[1], z[2]});
  std::array<double, 3> p{};
  double sum = 0.0;
  for (int i = 0; i < 3; ++i) sum += (p[static_cast<std::size_t>(i)] = std::exp(z[static_cast<std::size_t>(i)] - mx));
  // Zero wins every tie it is part of.
  const bool zero_wins = p[0] >= p[1] && p[0] >= p[2];
  return zero_wins ? arbiter::AgentChoice::Navigation : arbiter::AgentChoice::Action;
}

Outcome criterion_routing() {
  int checked = 0, agree = 0, invariant = 0, inv_checked = 0;
  auto check = [&](const std::array<double, 3>& z) {
    ++checked;
    agree += arbiter::route(z).choice == expected_route(z);
  };
  // Pure-class cases from probabilities.
  auto from_probs = [](double a, double b, double c) {
    return std::array<double, 3>{std::log(a), std::log(b), std::log(c)};
  };
  const bool pure_ok =
      arbiter::route(from_probs(0.2, 0.5, 0.3)).choice == arbiter::AgentChoice::Action &&
      arbiter::route(from_probs(0.9, 0.05, 0.05)).choice == arbiter::AgentChoice::Navigation &&
      arbiter::route(std::array<double, 3>{0.7, 0.7, 0.7}).choice == arbiter::AgentChoice::Navigation;
  check(from_probs(0.2, 0.5, 0.3));
  check(from_probs(0.9, 0.05, 0.05));
  check({0.7, 0.7, 0.7});

  std::mt19937_64 rng(5);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::uniform_int_distribution<int> grid(-64, 64);
  std::uniform_int_distribution<int> pow2(-4, 4);
  std::uniform_int_distribution<int> shift(-16, 16);
  for (int i = 0; i < kRouteFuzz; ++i) {
    std::array<double, 3> z{};
    if (i % 2 == 0) {
      for (auto& v : z) v = 4.0 * n01(rng);
    } else {
      for (auto& v : z) v = grid(rng) / 8.0;  // coarse grid, frequent exact ties
    }
    check(z);
    // Power-of-two scaling and integer shifts of grid logits are exact.
    if (i % 2 == 1) {
      const double c = std::ldexp(1.0, pow2(rng));
      const double d = shift(rng);
      const std::array<double, 3> z2{c * z[0] + d, c * z[1] + d, c * z[2] + d};
      ++inv_checked;
      invariant += arbiter::route(z2) == arbiter::route(z);
    }
  }
  const bool ok = pure_ok && agree == checked && invariant == inv_checked;
  return {ok, std::to_string(agree) + "/" + std::to_string(checked) + " routed per rule, " +
                  std::to_string(invariant) + "/" + std::to_string(inv_checked) +
                  " scale/shift invariant, pure cases " + (pure_ok ? "ok" : "wrong")};
}

Outcome criterion_determinism() {
  auto cfg = desk_config("nav9");
  cfg.workers = 1;
  cfg.total_steps = kDeterminismSteps;
  cfg.checkpoint_interval = 5000;
  std::array<std::string, 2> ckpt, log;
  for (int run = 0; run < 2; ++run) {
    const auto dir = scratch_dir("determinism_" + std::to_string(run));
    trainer::TrainHooks hooks;
    hooks.log_path = dir / "log.csv";
    hooks.checkpoint_dir = dir / "ckpt";
    trainer::train(cfg, hooks);
    ckpt[static_cast<std::size_t>(run)] = slurp(dir / "ckpt" / "final.bin") + slurp(dir / "ckpt" / "ckpt_5000.bin");
    log[static_cast<std::size_t>(run)] = slurp(dir / "log.csv");
  }
  const bool ok = !ckpt[0].empty() && ckpt[0] == ckpt[1] && log[0] == log[1] &&
                  log[0].find('\n') != log[0].rfind('\n');
  return {ok, std::string("checkpoints ") + (ckpt[0] == ckpt[1] ? "identical" : "differ") + " (" +
                  std::to_string(ckpt[0].size()) + " bytes), logs " +
                  (log[0] == log[1] ? "identical" : "differ") + " (" + std::to_string(log[0].size()) +
                  " bytes)"};
}

Outcome criterion_async() {
  auto cfg = desk_config("nav9");
  cfg.network_profile = "tiny";
  cfg.workers = kAsyncWorkers;
  cfg.total_steps = 1'000'000'000;
  trainer::TrainHooks hooks;
  hooks.max_updates_per_worker = kAsyncUpdates / kAsyncWorkers;
  const auto r = trainer::train(cfg, hooks);
  std::int64_t updates = 0, steps = 0;
  std::string errors;
  for (const auto& w : r.workers) {
    updates += w.updates;
    steps += w.steps;
    errors += w.error;
  }
  const bool finite = r.params.all_finite();
  const bool ok = errors.empty() && updates == kAsyncUpdates &&
                  r.applied_updates + r.skipped_updates == updates && r.skipped_updates == 0 &&
                  r.global_steps == steps && finite;
  return {ok, "applied " + std::to_string(r.applied_updates) + " + skipped " +
                  std::to_string(r.skipped_updates) + " vs worker sum " + std::to_string(updates) +
                  "; global steps " + std::to_string(r.global_steps) + " vs " + std::to_string(steps) +
                  "; params " + (finite ? "finite" : "NON-FINITE")};
}

double nav_success(const netcore::Parameters<float>& params, const trainer::TrainConfig& cfg) {
  const auto map = minidoom::load_map_file(cfg.maps.front());
  arbiter::PolicyAgent agent(params, arbiter::ActMode::Greedy);
  const auto eps = evalkit::run_episodes(agent, map, cfg.env_config(), kLearningEpisodes,
                                         cfg.env.mode, kEvalSeed, cfg.reward_profile());
  int ok = 0;
  for (const auto& e : eps) ok += e.objects > 0;
  return static_cast<double>(ok) / kLearningEpisodes;
}

Outcome criterion_navigation() {
  const auto cfg = desk_config("nav9");
  const double before = nav_success(untrained("nav9"), cfg);
  const double after = nav_success(trained("nav9"), cfg);
  const bool ok = after >= kNavSuccess && after > before;
  return {ok, "greedy object success " + fmt(after) + " after " + std::to_string(cfg.total_steps) +
                  " steps (>= " + fmt(kNavSuccess) + "), untrained " + fmt(before)};
}

double kill_death(const netcore::Parameters<float>& params, const trainer::TrainConfig& cfg) {
  const auto map = minidoom::load_map_file(cfg.maps.front());
  arbiter::PolicyAgent agent(params, arbiter::ActMode::Sample);
  const auto eps = evalkit::run_episodes(agent, map, cfg.env_config(), kLearningEpisodes,
                                         cfg.env.mode, kEvalSeed, cfg.reward_profile());
  long k = 0, d = 0;
  for (const auto& e : eps) {
    k += e.kills;
    d += e.deaths;
  }
  return evalkit::ratio(k, d);
}

Outcome criterion_action() {
  const auto cfg = desk_config("arena");
  const double before = kill_death(untrained("arena"), cfg);
  const double after = kill_death(trained("arena"), cfg);
  const bool ok = after >= kKillDeathFactor * before && after > before;
  return {ok, "kill-death ratio " + fmt(after) + " vs untrained " + fmt(before) + " (factor " +
                  (before > 0 ? fmt(after / before) : std::string("inf")) + ", need >= " +
                  fmt(kKillDeathFactor) + ")"};
}

Outcome criterion_divide_and_conquer() {
  const auto& action = trained("arena");
  const auto& nav = trained("gather");
  const auto eval_cfg = desk_config("heldout");
  evalkit::CompareRequest req;
  req.agents = {{"action", std::make_shared<arbiter::PolicyAgent>(action, arbiter::ActMode::Sample)},
                {"combined",
                 std::make_shared<arbiter::CombinedAgent>(action, nav, arbiter::ActMode::Sample)}};
  req.maps = {{"heldout", minidoom::load_map_file(eval_cfg.maps.front())}};
  req.episodes = kCompareEpisodes;
  req.mode = eval_cfg.env.mode;
  req.env = eval_cfg.env_config();
  req.seed = kEvalSeed;
  const auto report = evalkit::compare(req);
  const auto& a = report.rows[0];
  const auto& c = report.rows[1];
  const auto& p = report.p_values[0].objects;
  const bool ok = c.objects > a.objects && p.p && *p.p < kCompareP;
  return {ok, "objects combined " + fmt(c.objects) + " vs action " + fmt(a.objects) + ", Welch p=" +
                  (p.p ? fmt(*p.p, 3) : std::string("NA")) + " (kills " + fmt(c.kills) + " vs " +
                  fmt(a.kills) + ")"};
}

Outcome criterion_statistics() {
  const auto& cases = reference::ttest_cases();
  double worst_t = 0.0, worst_p = 0.0;
  int n = 0;
  for (const auto& tc : cases) {
    const auto r = evalkit::welch_t_test(tc.a, tc.b);
    if (!r.p) {
      worst_p = INFINITY;
      continue;
    }
    worst_t = std::max(worst_t, std::abs(r.t - tc.welch_t));
    worst_p = std::max(worst_p, std::abs(*r.p - tc.welch_p));
    ++n;
  }
  const std::vector<double> a{1, 2, 3, 4, 5}, b{2, 3, 4, 5, 6};
  const auto shifted = evalkit::welch_t_test(a, b);
  const bool shifted_ok = shifted.p && std::abs(shifted.t - reference::kShiftedWelchT) < kReferenceTol &&
                          std::abs(*shifted.p - reference::kShiftedWelchP) < kReferenceTol;
  const std::vector<double> z1{1, 1, 1}, z2{1, 1, 1};
  const bool na_ok = !evalkit::welch_t_test(z1, z2).p;
  const bool ok = n == kReferencePairs && worst_t < kReferenceTol && worst_p < kReferenceTol &&
                  shifted_ok && na_ok;
  return {ok, std::to_string(n) + " reference pairs, max |dt|=" + fmt(worst_t, 3) + " max |dp|=" +
                  fmt(worst_p, 3) + "; [1..5] vs [2..6] " + (shifted_ok ? "ok" : "wrong") +
                  "; zero-variance " + (na_ok ? "NA" : "not NA")};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {1, "gradient suite", criterion_gradients},
      {2, "loss identities", criterion_loss_identities},
      {3, "reward shaping", criterion_reward_shaping},
      {4, "replay samplers", criterion_samplers},
      {5, "routing", criterion_routing},
      {6, "single-worker determinism", criterion_determinism},
      {7, "async integrity", criterion_async},
      {8, "navigation learning", criterion_navigation},
      {9, "action learning", criterion_action},
      {10, "divide-and-conquer direction", criterion_divide_and_conquer},
      {11, "statistics oracle", criterion_statistics},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : all) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << std::setw(2) << c.id << ' ' << c.name << ": "
              << o.detail << " [" << std::fixed << std::setprecision(1) << secs << "s]"
              << std::defaultfloat << std::endl;
  }
  std::cout << (failed ? "acceptance: " + std::to_string(failed) + " criterion(s) failed"
                       : std::string("acceptance: all criteria passed"))
            << std::endl;
  return failed ? 1 : 0;
}
