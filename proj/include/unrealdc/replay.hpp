#pragma once

// Worker-local experience buffer for the auxiliary tasks.

#include <array>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "unrealdc/losses.hpp"
#include "unrealdc/minidoom.hpp"

namespace unrealdc::replay {

using minidoom::Observation;

/// observation seen, action taken from it, reward received, episode ended.
struct Transition {
  Observation observation;
  int action = 0;
  double reward = 0.0;
  bool done = false;
  bool operator==(const Transition&) const = default;
};

/// Not enough (or not the right kind of) data yet.
class WarmupError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Fixed-capacity ring. Logical index 0 is the oldest entry. The first
/// transition ever pushed is taken to begin an episode.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);
  std::size_t size() const { return size_; }
  std::size_t capacity() const { return slots_.size(); }
  const Transition& operator[](std::size_t i) const { return slots_[(head_ + i) % slots_.size()]; }
  /// True when entry i is known to be the first step of an episode.
  bool starts_episode(std::size_t i) const;

  /// Start indices whose window of `length` entries ends at most at a done flag.
  std::vector<std::size_t> valid_sequence_starts(std::size_t length) const;
  /// Endpoints with their two predecessors available (or padded at an episode start).
  std::vector<std::size_t> valid_rp_endpoints() const;

 private:
  std::vector<Transition> slots_;
  std::size_t head_ = 0;
  std::size_t size_ = 0;
  std::uint64_t pushed_ = 0;
};

std::size_t sample_sequence_start(const ReplayBuffer& buffer, std::size_t length,
                                  std::mt19937_64& rng);
/// `length` consecutive transitions starting at a uniformly drawn valid index.
/// Throws WarmupError when no valid window exists.
std::vector<Transition> sample_uniform_sequence(const ReplayBuffer& buffer, std::size_t length,
                                                std::mt19937_64& rng);

struct RpSample {
  std::array<Observation, 3> window;  // oldest first; zeros before an episode start
  double reward = 0.0;
  losses::RewardClass target = losses::RewardClass::Zero;
  std::size_t endpoint = 0;
};

/// ceil(batch/2) zero-reward and floor(batch/2) nonzero-reward endpoints,
/// each drawn uniformly from its class. Throws WarmupError naming an empty class.
std::vector<RpSample> sample_rp_batch(const ReplayBuffer& buffer, std::size_t batch_size,
                                      std::mt19937_64& rng);

}  // namespace unrealdc::replay
