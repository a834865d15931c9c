#include <cmath>

#include "unrealdc/trainer.hpp"

namespace unrealdc::trainer {

template <typename Real>
void rmsprop_apply(std::span<Real> params, std::span<const Real> grads, std::span<Real> g,
                   const RmsPropSettings& s) {
  if (params.size() != grads.size() || params.size() != g.size()) {
    throw std::invalid_argument("rmsprop_apply: size mismatch");
  }
  if (!(s.epsilon > 0.0)) throw std::invalid_argument("rmsprop_apply: epsilon must be positive");
  const Real decay = static_cast<Real>(s.decay);
  const Real one_minus = static_cast<Real>(1.0 - s.decay);
  const Real lr = static_cast<Real>(s.learning_rate);
  const Real eps = static_cast<Real>(s.epsilon);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Real gr = grads[i];
    g[i] = decay * g[i] + one_minus * gr * gr;
    params[i] -= lr * gr / std::sqrt(g[i] + eps);
  }
}

template <typename Real>
double clip_global_norm(std::span<Real> grads, double max_norm) {
  double sq = 0.0;
  for (const Real v : grads) sq += static_cast<double>(v) * static_cast<double>(v);
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const Real scale = static_cast<Real>(max_norm / norm);
    for (auto& v : grads) v *= scale;
  }
  return norm;
}

template <typename Real>
SharedStore<Real>::SharedStore(netcore::Parameters<Real> initial)
    : params_(std::move(initial)), g_(params_.config), layout_(&netcore::layout_for(params_.config)) {}

template <typename Real>
void SharedStore<Real>::read(netcore::Parameters<Real>& out) const {
  if (!(out.config == params_.config)) out = netcore::Parameters<Real>(params_.config);
  for (std::size_t b = 0; b < netcore::kBlockCount; ++b) {
    const auto& info = layout_->blocks[b];
    std::lock_guard lock(locks_[b]);
    std::copy_n(params_.values.begin() + static_cast<std::ptrdiff_t>(info.offset), info.size,
                out.values.begin() + static_cast<std::ptrdiff_t>(info.offset));
  }
}

template <typename Real>
netcore::Parameters<Real> SharedStore<Real>::params() const {
  netcore::Parameters<Real> out(params_.config);
  read(out);
  return out;
}

template <typename Real>
netcore::Parameters<Real> SharedStore<Real>::statistics() const {
  netcore::Parameters<Real> out(g_.config);
  for (std::size_t b = 0; b < netcore::kBlockCount; ++b) {
    const auto& info = layout_->blocks[b];
    std::lock_guard lock(locks_[b]);
    std::copy_n(g_.values.begin() + static_cast<std::ptrdiff_t>(info.offset), info.size,
                out.values.begin() + static_cast<std::ptrdiff_t>(info.offset));
  }
  return out;
}

template <typename Real>
bool SharedStore<Real>::apply(const netcore::Parameters<Real>& grads, const RmsPropSettings& s) {
  if (grads.values.size() != params_.values.size()) {
    throw std::invalid_argument("SharedStore::apply: gradient size mismatch");
  }
  if (!grads.all_finite()) {
    skipped_.fetch_add(1);
    return false;
  }
  for (std::size_t b = 0; b < netcore::kBlockCount; ++b) {
    const auto& info = layout_->blocks[b];
    std::lock_guard lock(locks_[b]);
    rmsprop_apply<Real>(std::span<Real>(params_.values).subspan(info.offset, info.size),
                        std::span<const Real>(grads.values).subspan(info.offset, info.size),
                        std::span<Real>(g_.values).subspan(info.offset, info.size), s);
  }
  applied_.fetch_add(1);
  return true;
}

template void rmsprop_apply<float>(std::span<float>, std::span<const float>, std::span<float>,
                                   const RmsPropSettings&);
template void rmsprop_apply<double>(std::span<double>, std::span<const double>, std::span<double>,
                                    const RmsPropSettings&);
template double clip_global_norm<float>(std::span<float>, double);
template double clip_global_norm<double>(std::span<double>, double);
template class SharedStore<float>;
template class SharedStore<double>;

}  // namespace unrealdc::trainer
