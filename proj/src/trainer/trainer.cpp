#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>
#include <thread>

#include "unrealdc/replay.hpp"
#include "unrealdc/trainer.hpp"

namespace unrealdc::trainer {

namespace fs = std::filesystem;
using minidoom::Event;
using minidoom::Observation;

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(splitmix64(seed) ^ a) ^ b);
}

template <typename Real>
int sample_action(std::span<const Real> probs, std::mt19937_64& rng) {
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += static_cast<double>(probs[i]);
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;
}

template <typename Real>
struct Run {
  const TrainConfig& cfg;
  const TrainHooks& hooks;
  netcore::NetworkConfig net_cfg;
  netcore::Network<Real> net;
  SharedStore<Real> store;
  std::vector<minidoom::MapSpec> maps;
  std::atomic<std::int64_t> global_steps{0};
  std::atomic<bool> stop{false};

  std::mutex log_mu;
  std::ofstream log_file;
  std::vector<LogRow> log;

  std::mutex ckpt_mu;
  std::int64_t next_checkpoint = 0;
  std::string abort_reason;

  Run(const TrainConfig& c, const TrainHooks& h, netcore::Parameters<Real> init)
      : cfg(c), hooks(h), net_cfg(c.network_config()), net(net_cfg), store(std::move(init)) {}

  double learning_rate() const {
    if (!cfg.lr_linear_decay || cfg.total_steps == 0) return cfg.learning_rate;
    const double frac =
        static_cast<double>(global_steps.load()) / static_cast<double>(cfg.total_steps);
    return cfg.learning_rate * std::max(0.0, 1.0 - frac);
  }

  void write_log(LogRow row) {
    std::lock_guard lock(log_mu);
    row.global_step = global_steps.load();
    if (log_file.is_open()) {
      log_file << format_log_row(row) << '\n';
      log_file.flush();
    }
    log.push_back(row);
  }

  void abort(const std::string& reason) {
    std::lock_guard lock(ckpt_mu);
    if (abort_reason.empty()) abort_reason = reason;
    stop = true;
  }

  void maybe_checkpoint() {
    if (!hooks.checkpoint_dir || cfg.checkpoint_interval <= 0) return;
    std::lock_guard lock(ckpt_mu);
    const std::int64_t now = global_steps.load();
    if (now < next_checkpoint) return;
    const std::int64_t mark = now - now % cfg.checkpoint_interval;
    next_checkpoint = mark + cfg.checkpoint_interval;
    try {
      netcore::save_checkpoint(*hooks.checkpoint_dir / ("ckpt_" + std::to_string(mark) + ".bin"),
                               store.params().template cast<float>());
    } catch (const std::exception& e) {
      if (abort_reason.empty()) abort_reason = e.what();
      stop = true;
    }
  }

  void worker(int id, WorkerSummary& summary);
};

template <typename Real>
void Run<Real>::worker(int id, WorkerSummary& summary) {
  const auto uid = static_cast<std::uint64_t>(id);
  const auto& map = maps[static_cast<std::size_t>(id) % maps.size()];
  const auto env_cfg = cfg.env_config();
  const auto profile = cfg.reward_profile();
  const auto actions = cfg.action_set();
  const auto& w = cfg.loss;
  const std::size_t n_roll = static_cast<std::size_t>(cfg.rollout_length);

  std::mt19937_64 rng(derive_seed(cfg.seed, uid, 0xACull));
  replay::ReplayBuffer buffer(cfg.replay_capacity);
  minidoom::Environment env(map, env_cfg);

  std::int64_t episode = 0;
  Observation obs = env.reset(derive_seed(cfg.seed, uid, static_cast<std::uint64_t>(episode)));
  auto state = netcore::RecurrentState<Real>::zero(net_cfg);
  LogRow ep_row;
  ep_row.worker = id;
  losses::LossComponents last_loss;

  netcore::Parameters<Real> local(net_cfg);
  netcore::Parameters<Real> grads(net_cfg);

  std::vector<Observation> frames;
  std::vector<int> acts;
  std::vector<double> rewards;
  std::unique_ptr<bool[]> dones(new bool[std::max<std::size_t>(n_roll, 1)]);

  while (!stop.load() && global_steps.load() < cfg.total_steps) {
    if (hooks.max_updates_per_worker && summary.updates >= *hooks.max_updates_per_worker) break;
    store.read(local);
    const auto start_state = state;

    frames.clear();
    acts.clear();
    rewards.clear();
    bool terminal = false;
    while (frames.size() < n_roll) {
      const Observation* one = &obs;
      auto tr = net.forward(local, std::span<const Observation>(one, 1), state,
                            netcore::kPolicyValue);
      const int a = sample_action<Real>(tr.outputs[0].policy, rng);
      state = std::move(tr.final_state);
      auto out = env.step(actions[static_cast<std::size_t>(a)], profile);
      global_steps.fetch_add(1);
      ++summary.steps;

      dones[frames.size()] = out.done;
      frames.push_back(obs);
      acts.push_back(a);
      rewards.push_back(out.reward);
      buffer.push({obs, a, out.reward, out.done});

      ep_row.kills += out.events[Event::Kill];
      ep_row.deaths += out.events[Event::Death];
      ep_row.objects += out.events[Event::ObjectGathered];
      ep_row.reward += out.reward;

      obs = std::move(out.observation);
      if (out.done) {
        terminal = true;
        ep_row.episode = episode;
        ep_row.loss = last_loss;
        write_log(ep_row);
        ep_row = LogRow{};
        ep_row.worker = id;
        ++episode;
        ++summary.episodes;
        obs = env.reset(derive_seed(cfg.seed, uid, static_cast<std::uint64_t>(episode)));
        state = netcore::RecurrentState<Real>::zero(net_cfg);
        break;
      }
    }

    // On-policy actor-critic terms.
    grads.fill(Real(0));
    UpdateRecord rec;
    rec.worker = id;
    const std::size_t n = frames.size();
    std::optional<double> bootstrap;
    if (!terminal) {
      const Observation* one = &obs;
      auto tr = net.forward(local, std::span<const Observation>(one, 1), state,
                            netcore::kPolicyValue);
      bootstrap = static_cast<double>(tr.outputs[0].value);
    }
    const auto returns = losses::n_step_returns(std::span<const double>(rewards),
                                                std::span<const bool>(dones.get(), n), bootstrap,
                                                w.gamma);
    {
      auto tr = net.forward(local, frames, start_state, netcore::kPolicyValue);
      std::vector<netcore::OutputGrad<Real>> og(n);
      const auto hl = losses::a3c_objective<Real>(tr.outputs, acts, returns, w.entropy_beta, og);
      rec.loss.pi = hl.policy;
      rec.loss.v = hl.value;
      net.backward(local, tr, og, grads);
    }

    // Value replay and pixel control on one replayed window from a zero state.
    if (w.lambda_vr > 0.0 || w.lambda_pc > 0.0) {
      try {
        const auto seq = replay::sample_uniform_sequence(buffer, n_roll, rng);
        std::vector<Observation> rf;
        std::vector<int> ra;
        std::vector<double> rr;
        std::unique_ptr<bool[]> rd(new bool[seq.size()]);
        for (std::size_t i = 0; i < seq.size(); ++i) {
          rf.push_back(seq[i].observation);
          ra.push_back(seq[i].action);
          rr.push_back(seq[i].reward);
          rd[i] = seq[i].done;
        }
        unsigned heads = 0;
        if (w.lambda_vr > 0.0) heads |= netcore::kPolicyValue;
        if (w.lambda_pc > 0.0) heads |= netcore::kPixelControl;
        auto tr = net.forward(local, rf, netcore::RecurrentState<Real>::zero(net_cfg), heads);
        std::vector<netcore::OutputGrad<Real>> og(seq.size());
        if (w.lambda_vr > 0.0) {
          rec.loss.vr = losses::vr_objective<Real>(tr.outputs, rr,
                                                   std::span<const bool>(rd.get(), seq.size()),
                                                   w.gamma, og);
          losses::scale_output_grads<Real>(og, w.lambda_vr);
          rec.vr_active = true;
        }
        if (w.lambda_pc > 0.0) {
          std::vector<netcore::OutputGrad<Real>> pg(seq.size());
          rec.loss.pc = losses::pc_objective<Real>(tr.outputs, rf, ra, net_cfg, w.gamma_pc, pg);
          losses::scale_output_grads<Real>(pg, w.lambda_pc);
          for (std::size_t t = 0; t < seq.size(); ++t) og[t].pc_q = std::move(pg[t].pc_q);
          rec.pc_active = true;
        }
        net.backward(local, tr, og, grads);
      } catch (const replay::WarmupError&) {
      }
    }

    // Reward prediction on a class-balanced batch, averaged over the batch.
    if (w.lambda_rp > 0.0) {
      try {
        const auto batch = replay::sample_rp_batch(buffer, cfg.rp_batch, rng);
        const double scale = w.lambda_rp / static_cast<double>(batch.size());
        double total = 0.0;
        for (const auto& s : batch) {
          auto st = netcore::RecurrentState<Real>::zero(net_cfg);
          st.history = {s.window[0], s.window[1]};
          auto tr = net.forward(local, std::span<const Observation>(&s.window[2], 1), st,
                                netcore::kRewardPrediction);
          std::vector<netcore::OutputGrad<Real>> og(1);
          total += losses::rp_objective<Real>(tr.outputs[0], s.reward, og[0]);
          losses::scale_output_grads<Real>(og, scale);
          net.backward(local, tr, og, grads);
        }
        rec.loss.rp = total / static_cast<double>(batch.size());
        rec.rp_active = true;
      } catch (const replay::WarmupError&) {
      }
    }

    rec.grad_norm = clip_global_norm<Real>(grads.values, cfg.grad_clip_norm);
    RmsPropSettings rs{learning_rate(), cfg.rmsprop_decay, cfg.rmsprop_epsilon};
    rec.applied = store.apply(grads, rs);
    ++summary.updates;
    rec.worker_update = summary.updates;
    rec.global_step = global_steps.load();
    last_loss = rec.loss;
    if (hooks.on_update) hooks.on_update(rec);
    maybe_checkpoint();
  }
}

template <typename Real>
TrainResult run_training(const TrainConfig& cfg, const TrainHooks& hooks,
                         const std::optional<netcore::Parameters<float>>& initial) {
  const auto net_cfg = cfg.network_config();
  netcore::Parameters<Real> init;
  if (initial) {
    if (!(initial->config == net_cfg)) {
      throw ConfigError("initial parameters do not match the configured network");
    }
    init = initial->template cast<Real>();
  } else {
    init = netcore::Network<Real>(net_cfg).init_params(derive_seed(cfg.seed, 0xFFFF, 0));
  }

  Run<Real> run(cfg, hooks, std::move(init));
  for (const auto& p : cfg.maps) {
    try {
      run.maps.push_back(minidoom::load_map_file(p));
    } catch (const std::exception& e) {
      throw ConfigError("cannot load map " + p.string() + ": " + e.what());
    }
  }
  if (hooks.checkpoint_dir) {
    std::error_code ec;
    fs::create_directories(*hooks.checkpoint_dir, ec);
    if (ec) {
      throw TrainingAborted("cannot create checkpoint directory " +
                            hooks.checkpoint_dir->string() + ": " + ec.message());
    }
    run.next_checkpoint = cfg.checkpoint_interval;
  }
  if (hooks.log_path) {
    run.log_file.open(*hooks.log_path, std::ios::trunc);
    if (!run.log_file) throw TrainingAborted("cannot open log file " + hooks.log_path->string());
    run.log_file << kLogHeader << '\n';
  }

  TrainResult result;
  result.workers.resize(static_cast<std::size_t>(cfg.workers));
  auto body = [&](int id) {
    auto& summary = result.workers[static_cast<std::size_t>(id)];
    try {
      run.worker(id, summary);
    } catch (const std::exception& e) {
      summary.error = e.what();
    }
  };
  if (cfg.workers == 1) {
    body(0);
  } else {
    std::vector<std::thread> threads;
    for (int i = 0; i < cfg.workers; ++i) threads.emplace_back(body, i);
    for (auto& t : threads) t.join();
  }

  result.params = run.store.params().template cast<float>();
  result.global_steps = run.global_steps.load();
  result.applied_updates = run.store.applied_updates();
  result.skipped_updates = run.store.skipped_updates();
  result.log = std::move(run.log);
  if (run.log_file.is_open()) run.log_file.close();

  if (!run.abort_reason.empty()) throw TrainingAborted("checkpoint write failed: " + run.abort_reason);
  if (hooks.checkpoint_dir) {
    try {
      netcore::save_checkpoint(*hooks.checkpoint_dir / "final.bin", result.params);
    } catch (const std::exception& e) {
      throw TrainingAborted(std::string("checkpoint write failed: ") + e.what());
    }
  }
  return result;
}

}  // namespace

std::string format_log_row(const LogRow& r) {
  std::ostringstream os;
  os.precision(9);
  os << r.global_step << ',' << r.worker << ',' << r.episode << ',' << r.kills << ',' << r.deaths
     << ',' << r.objects << ',' << r.reward << ',' << r.loss.pi << ',' << r.loss.v << ','
     << r.loss.vr << ',' << r.loss.rp << ',' << r.loss.pc;
  return os.str();
}

TrainResult train(const TrainConfig& config, const TrainHooks& hooks,
                  const std::optional<netcore::Parameters<float>>& initial) {
  config.validate();
  if (config.precision == Precision::Double) return run_training<double>(config, hooks, initial);
  return run_training<float>(config, hooks, initial);
}

std::vector<CurvePoint> ratio_curve(std::span<const LogRow> log, std::size_t window) {
  std::vector<CurvePoint> out;
  if (window == 0) return out;
  long kills = 0, deaths = 0, objects = 0;
  for (std::size_t i = 0; i < log.size(); ++i) {
    kills += log[i].kills;
    deaths += log[i].deaths;
    objects += log[i].objects;
    if (i >= window) {
      kills -= log[i - window].kills;
      deaths -= log[i - window].deaths;
      objects -= log[i - window].objects;
    }
    if (i + 1 >= window) {
      const double den = static_cast<double>(deaths) + 1.0;
      out.push_back({log[i].global_step, static_cast<double>(kills) / den,
                     static_cast<double>(objects) / den});
    }
  }
  return out;
}

}  // namespace unrealdc::trainer
