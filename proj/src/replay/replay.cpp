#include "unrealdc/replay.hpp"

#include <string>

namespace unrealdc::replay {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : slots_(capacity) {
  if (capacity == 0) throw std::invalid_argument("replay capacity must be positive");
}

void ReplayBuffer::push(Transition t) {
  const std::size_t cap = slots_.size();
  if (size_ < cap) {
    slots_[(head_ + size_) % cap] = std::move(t);
    ++size_;
  } else {
    slots_[head_] = std::move(t);
    head_ = (head_ + 1) % cap;
  }
  ++pushed_;
}

bool ReplayBuffer::starts_episode(std::size_t i) const {
  if (i == 0) return pushed_ == size_;
  return (*this)[i - 1].done;
}

std::vector<std::size_t> ReplayBuffer::valid_sequence_starts(std::size_t length) const {
  std::vector<std::size_t> starts;
  if (length == 0 || size_ < length) return starts;
  // prefix[i] = number of done flags among entries [0, i)
  std::vector<std::size_t> prefix(size_ + 1, 0);
  for (std::size_t i = 0; i < size_; ++i) prefix[i + 1] = prefix[i] + ((*this)[i].done ? 1 : 0);
  for (std::size_t start = 0; start + length <= size_; ++start) {
    // A done flag is allowed only on the window's last entry.
    if (prefix[start + length - 1] == prefix[start]) starts.push_back(start);
  }
  return starts;
}

std::vector<std::size_t> ReplayBuffer::valid_rp_endpoints() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < size_; ++i) {
    std::size_t j = i;
    bool ok = true;
    for (int k = 0; k < 2; ++k) {
      if (starts_episode(j)) break;
      if (j == 0) {
        ok = false;
        break;
      }
      --j;
    }
    if (ok) out.push_back(i);
  }
  return out;
}

std::size_t sample_sequence_start(const ReplayBuffer& buffer, std::size_t length,
                                  std::mt19937_64& rng) {
  if (buffer.size() < length) {
    throw WarmupError("replay warm-up: " + std::to_string(buffer.size()) +
                      " transitions stored, sequence needs " + std::to_string(length));
  }
  const auto starts = buffer.valid_sequence_starts(length);
  if (starts.empty()) {
    throw WarmupError("replay warm-up: no window of " + std::to_string(length) +
                      " transitions within a single episode");
  }
  return starts[std::uniform_int_distribution<std::size_t>(0, starts.size() - 1)(rng)];
}

std::vector<Transition> sample_uniform_sequence(const ReplayBuffer& buffer, std::size_t length,
                                                std::mt19937_64& rng) {
  const std::size_t start = sample_sequence_start(buffer, length, rng);
  std::vector<Transition> out;
  out.reserve(length);
  for (std::size_t i = 0; i < length; ++i) out.push_back(buffer[start + i]);
  return out;
}

std::vector<RpSample> sample_rp_batch(const ReplayBuffer& buffer, std::size_t batch_size,
                                      std::mt19937_64& rng) {
  std::vector<std::size_t> zero, nonzero;
  for (const std::size_t i : buffer.valid_rp_endpoints()) {
    (buffer[i].reward == 0.0 ? zero : nonzero).push_back(i);
  }
  if (zero.empty()) throw WarmupError("replay warm-up: no zero-reward transitions for reward prediction");
  if (nonzero.empty()) throw WarmupError("replay warm-up: no nonzero-reward transitions for reward prediction");

  auto make = [&](std::size_t end) {
    RpSample s;
    s.endpoint = end;
    s.reward = buffer[end].reward;
    s.target = losses::reward_class(s.reward);
    const Observation& last = buffer[end].observation;
    s.window[2] = last;
    std::size_t j = end;
    bool padded = false;
    for (int slot = 1; slot >= 0; --slot) {
      if (!padded && buffer.starts_episode(j)) padded = true;
      if (padded) {
        s.window[static_cast<std::size_t>(slot)] = Observation::zeros(last.height, last.width);
      } else {
        --j;
        s.window[static_cast<std::size_t>(slot)] = buffer[j].observation;
      }
    }
    return s;
  };

  std::vector<RpSample> batch;
  batch.reserve(batch_size);
  const std::size_t zeros = (batch_size + 1) / 2;
  for (std::size_t i = 0; i < batch_size; ++i) {
    const auto& pool = i < zeros ? zero : nonzero;
    batch.push_back(make(pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)]));
  }
  return batch;
}

}  // namespace unrealdc::replay
