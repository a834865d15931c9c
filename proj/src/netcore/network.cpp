#include <algorithm>
#include <cmath>
#include <random>

#include "unrealdc/netcore.hpp"

namespace unrealdc::netcore {

namespace {

template <typename Real>
Real sigmoid(Real x) {
  return Real(1) / (Real(1) + std::exp(-x));
}

template <typename Real>
void relu_inplace(std::span<Real> v) {
  for (auto& x : v) x = x > Real(0) ? x : Real(0);
}

template <typename Real>
void relu_mask(std::span<Real> grad, std::span<const Real> activation) {
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (!(activation[i] > Real(0))) grad[i] = Real(0);
  }
}

template <typename Real>
bool any_nonzero(std::span<const Real> v) {
  return std::any_of(v.begin(), v.end(), [](Real x) { return x != Real(0); });
}

// y = W x + b, W is rows x cols row-major.
template <typename Real>
void affine(std::span<const Real> w, std::span<const Real> b, std::span<const Real> x,
            std::span<Real> y) {
  const std::size_t cols = x.size();
  for (std::size_t r = 0; r < y.size(); ++r) {
    const Real* row = w.data() + r * cols;
    Real acc = b[r];
    for (std::size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
    y[r] = acc;
  }
}

// dW += dy x^T, db += dy, dx += W^T dy (dx optional).
template <typename Real>
void affine_backward(std::span<const Real> w, std::span<const Real> x, std::span<const Real> dy,
                     std::span<Real> dw, std::span<Real> db, std::span<Real> dx) {
  const std::size_t cols = x.size();
  for (std::size_t r = 0; r < dy.size(); ++r) {
    const Real g = dy[r];
    if (g == Real(0)) continue;
    db[r] += g;
    Real* drow = dw.data() + r * cols;
    const Real* row = w.data() + r * cols;
    for (std::size_t c = 0; c < cols; ++c) drow[c] += g * x[c];
    if (!dx.empty()) {
      for (std::size_t c = 0; c < cols; ++c) dx[c] += g * row[c];
    }
  }
}

struct ConvGeom {
  int in_h, in_w, in_c, filters, kernel, stride, out_h, out_w;
};

// HWC input, (F,K,K,C) weights, HWC output, VALID padding.
template <typename Real>
void conv_forward(const ConvGeom& g, std::span<const Real> in, std::span<const Real> w,
                  std::span<const Real> b, std::span<Real> out) {
  const int row_len = g.kernel * g.in_c;
  for (int oy = 0; oy < g.out_h; ++oy) {
    for (int ox = 0; ox < g.out_w; ++ox) {
      Real* o = out.data() + (oy * g.out_w + ox) * g.filters;
      for (int f = 0; f < g.filters; ++f) {
        Real acc = b[static_cast<std::size_t>(f)];
        for (int ky = 0; ky < g.kernel; ++ky) {
          const Real* irow = in.data() + ((oy * g.stride + ky) * g.in_w + ox * g.stride) * g.in_c;
          const Real* wrow = w.data() + (f * g.kernel + ky) * row_len;
          for (int j = 0; j < row_len; ++j) acc += irow[j] * wrow[j];
        }
        o[f] = acc;
      }
    }
  }
}

// dpre: gradient w.r.t. the pre-activation output.
template <typename Real>
void conv_backward(const ConvGeom& g, std::span<const Real> in, std::span<const Real> w,
                   std::span<const Real> dpre, std::span<Real> dw, std::span<Real> db,
                   std::span<Real> din) {
  const int row_len = g.kernel * g.in_c;
  for (int oy = 0; oy < g.out_h; ++oy) {
    for (int ox = 0; ox < g.out_w; ++ox) {
      const Real* d = dpre.data() + (oy * g.out_w + ox) * g.filters;
      for (int f = 0; f < g.filters; ++f) {
        const Real gv = d[f];
        if (gv == Real(0)) continue;
        db[static_cast<std::size_t>(f)] += gv;
        for (int ky = 0; ky < g.kernel; ++ky) {
          const int ioff = ((oy * g.stride + ky) * g.in_w + ox * g.stride) * g.in_c;
          const Real* irow = in.data() + ioff;
          const int woff = (f * g.kernel + ky) * row_len;
          Real* dwrow = dw.data() + woff;
          for (int j = 0; j < row_len; ++j) dwrow[j] += gv * irow[j];
          if (!din.empty()) {
            const Real* wrow = w.data() + woff;
            Real* dirow = din.data() + ioff;
            for (int j = 0; j < row_len; ++j) dirow[j] += gv * wrow[j];
          }
        }
      }
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Parameters / state

template <typename Real>
Parameters<Real>::Parameters(const NetworkConfig& cfg)
    : config(cfg), values(layout_for(cfg).total, Real(0)) {}

template <typename Real>
std::span<Real> Parameters<Real>::block(Block b) {
  const auto& info = layout_for(config)[b];
  return {values.data() + info.offset, info.size};
}

template <typename Real>
std::span<const Real> Parameters<Real>::block(Block b) const {
  const auto& info = layout_for(config)[b];
  return {values.data() + info.offset, info.size};
}

template <typename Real>
bool Parameters<Real>::all_finite() const {
  return std::all_of(values.begin(), values.end(), [](Real v) { return std::isfinite(v); });
}

template <typename Real>
RecurrentState<Real> RecurrentState<Real>::zero(const NetworkConfig& config) {
  RecurrentState s;
  s.hidden.assign(static_cast<std::size_t>(config.recurrent_size), Real(0));
  s.cell.assign(static_cast<std::size_t>(config.recurrent_size), Real(0));
  return s;
}

// ---------------------------------------------------------------------------
// Network

template <typename Real>
Network<Real>::Network(NetworkConfig config)
    : config_(config), layout_(&layout_for(config)) {}

template <typename Real>
std::span<const Real> Network<Real>::view(const Parameters<Real>& p, Block b) const {
  const auto& info = (*layout_)[b];
  return {p.values.data() + info.offset, info.size};
}

template <typename Real>
std::span<Real> Network<Real>::view(Parameters<Real>& p, Block b) const {
  const auto& info = (*layout_)[b];
  return {p.values.data() + info.offset, info.size};
}

template <typename Real>
void Network<Real>::check_params(const Parameters<Real>& params) const {
  if (!(params.config == config_) || params.values.size() != layout_->total) {
    throw ShapeError("parameters do not match the network config (expected " +
                     std::to_string(layout_->total) + " values, got " +
                     std::to_string(params.values.size()) + ")");
  }
}

template <typename Real>
Parameters<Real> Network<Real>::init_params(std::uint64_t seed) const {
  Parameters<Real> p(config_);
  std::mt19937_64 rng(seed);
  const auto& c = config_;
  auto fill = [&](Block b, int fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (auto& v : p.block(b)) v = static_cast<Real>(dist(rng));
  };
  fill(Block::Conv1W, c.conv1.kernel * c.conv1.kernel * c.input_channels);
  fill(Block::Conv2W, c.conv2.kernel * c.conv2.kernel * c.conv1.filters);
  fill(Block::FcW, c.conv2_size());
  fill(Block::LstmWx, c.fc_size);
  fill(Block::LstmWh, c.recurrent_size);
  fill(Block::PolicyW, c.recurrent_size);
  fill(Block::ValueW, c.recurrent_size);
  fill(Block::RpW, 3 * c.conv2_size());
  fill(Block::PcFcW, c.recurrent_size);
  fill(Block::PcDeconvW, c.pc_channels * c.pc_kernel * c.pc_kernel);
  return p;
}

template <typename Real>
ForwardTrace<Real> Network<Real>::forward(const Parameters<Real>& params,
                                          std::span<const Observation> frames,
                                          const RecurrentState<Real>& state,
                                          unsigned heads) const {
  check_params(params);
  const auto& c = config_;
  if (frames.empty()) throw ShapeError("forward: empty frame sequence");
  if (static_cast<int>(frames.size()) > c.unroll_length) {
    throw ShapeError("forward: sequence of " + std::to_string(frames.size()) +
                     " exceeds unroll length " + std::to_string(c.unroll_length));
  }
  for (const auto& f : frames) {
    if (f.height != c.input_height || f.width != c.input_width ||
        f.pixels.size() != static_cast<std::size_t>(c.input_height * c.input_width * 3)) {
      throw ShapeError("conv1: input frame " + std::to_string(f.height) + "x" +
                       std::to_string(f.width) + " does not match " +
                       std::to_string(c.input_height) + "x" + std::to_string(c.input_width) + "x3");
    }
  }
  const auto r = static_cast<std::size_t>(c.recurrent_size);
  if (state.hidden.size() != r || state.cell.size() != r) {
    throw ShapeError("lstm: recurrent state size does not match recurrent_size " +
                     std::to_string(r));
  }
  if (state.history.size() > 2) throw ShapeError("reward_prediction: more than 2 history frames");

  const bool run_rp = heads & kRewardPrediction;
  const bool run_lstm = heads & (kPolicyValue | kPixelControl);
  ForwardTrace<Real> tr;
  tr.heads = heads;
  tr.history_frames = run_rp ? 2 : 0;
  const std::size_t steps = frames.size();
  const std::size_t total_frames = tr.history_frames + steps;

  // Inputs: zero padding, carried history, then the new frames.
  const std::size_t in_size = static_cast<std::size_t>(c.input_height * c.input_width * 3);
  tr.input.resize(total_frames);
  for (std::size_t k = 0; k < total_frames; ++k) {
    const Observation* src = nullptr;
    if (k >= tr.history_frames) {
      src = &frames[k - tr.history_frames];
    } else {
      const std::size_t pad = 2 - state.history.size();
      if (k >= pad) src = &state.history[k - pad];
    }
    if (src && (src->height != c.input_height || src->width != c.input_width)) {
      throw ShapeError("reward_prediction: history frame dims do not match input");
    }
    tr.input[k].assign(in_size, Real(0));
    if (src) std::copy(src->pixels.begin(), src->pixels.end(), tr.input[k].begin());
  }

  const ConvGeom g1{c.input_height, c.input_width, 3, c.conv1.filters, c.conv1.kernel,
                    c.conv1.stride, c.conv1_height(), c.conv1_width()};
  const ConvGeom g2{g1.out_h, g1.out_w, c.conv1.filters, c.conv2.filters, c.conv2.kernel,
                    c.conv2.stride, c.conv2_height(), c.conv2_width()};
  tr.conv1.resize(total_frames);
  tr.conv2.resize(total_frames);
  for (std::size_t k = 0; k < total_frames; ++k) {
    tr.conv1[k].resize(static_cast<std::size_t>(g1.out_h * g1.out_w * g1.filters));
    conv_forward<Real>(g1, tr.input[k], view(params, Block::Conv1W), view(params, Block::Conv1B),
                       tr.conv1[k]);
    relu_inplace<Real>(tr.conv1[k]);
    tr.conv2[k].resize(static_cast<std::size_t>(c.conv2_size()));
    conv_forward<Real>(g2, tr.conv1[k], view(params, Block::Conv2W), view(params, Block::Conv2B),
                       tr.conv2[k]);
    relu_inplace<Real>(tr.conv2[k]);
  }

  tr.initial_hidden = state.hidden;
  tr.initial_cell = state.cell;
  tr.outputs.resize(steps);
  const auto a = static_cast<std::size_t>(c.action_count);
  std::vector<Real> h = state.hidden;
  std::vector<Real> cell = state.cell;
  std::vector<Real> rp_in(static_cast<std::size_t>(3 * c.conv2_size()));

  if (run_lstm) {
    tr.fc.resize(steps);
    tr.gates.resize(steps);
    tr.cell.resize(steps);
    tr.hidden.resize(steps);
    if (heads & kPixelControl) tr.pc_hidden.resize(steps);
  }

  for (std::size_t t = 0; t < steps; ++t) {
    const std::size_t k = tr.history_frames + t;
    auto& out = tr.outputs[t];
    if (run_lstm) {
      auto& fc = tr.fc[t];
      fc.resize(static_cast<std::size_t>(c.fc_size));
      affine<Real>(view(params, Block::FcW), view(params, Block::FcB), tr.conv2[k], fc);
      relu_inplace<Real>(fc);

      auto& z = tr.gates[t];
      z.resize(4 * r);
      affine<Real>(view(params, Block::LstmWx), view(params, Block::LstmB), fc, z);
      {
        const auto wh = view(params, Block::LstmWh);
        for (std::size_t row = 0; row < 4 * r; ++row) {
          const Real* wrow = wh.data() + row * r;
          Real acc = 0;
          for (std::size_t j = 0; j < r; ++j) acc += wrow[j] * h[j];
          z[row] += acc;
        }
      }
      for (std::size_t j = 0; j < r; ++j) {
        z[j] = sigmoid(z[j]);                   // input gate
        z[r + j] = sigmoid(z[r + j]);           // forget gate
        z[2 * r + j] = std::tanh(z[2 * r + j]); // candidate
        z[3 * r + j] = sigmoid(z[3 * r + j]);   // output gate
        cell[j] = z[r + j] * cell[j] + z[j] * z[2 * r + j];
        h[j] = z[3 * r + j] * std::tanh(cell[j]);
      }
      tr.cell[t] = cell;
      tr.hidden[t] = h;

      if (heads & kPolicyValue) {
        out.policy_logits.resize(a);
        affine<Real>(view(params, Block::PolicyW), view(params, Block::PolicyB), h,
                     out.policy_logits);
        const Real mx = *std::max_element(out.policy_logits.begin(), out.policy_logits.end());
        out.policy.resize(a);
        Real sum = 0;
        for (std::size_t i = 0; i < a; ++i) {
          out.policy[i] = std::exp(out.policy_logits[i] - mx);
          sum += out.policy[i];
        }
        for (auto& p : out.policy) p /= sum;
        Real v = 0;
        affine<Real>(view(params, Block::ValueW), view(params, Block::ValueB), h,
                     std::span<Real>(&v, 1));
        out.value = v;
      }
      if (heads & kPixelControl) {
        auto& ph = tr.pc_hidden[t];
        ph.resize(static_cast<std::size_t>(c.pc_pre_size()));
        affine<Real>(view(params, Block::PcFcW), view(params, Block::PcFcB), h, ph);
        relu_inplace<Real>(ph);
        out.pc_q.assign(static_cast<std::size_t>(c.pc_size()), Real(0));
        const auto db = view(params, Block::PcDeconvB);
        for (int pos = 0; pos < c.pc_height * c.pc_width; ++pos) {
          for (std::size_t ai = 0; ai < a; ++ai) out.pc_q[pos * a + ai] = db[ai];
        }
        const auto dw = view(params, Block::PcDeconvW);
        const int cc = c.pc_channels;
        const int kk = c.pc_kernel;
        for (int py = 0; py < c.pc_pre_height(); ++py) {
          for (int px = 0; px < c.pc_pre_width(); ++px) {
            for (int ch = 0; ch < cc; ++ch) {
              const Real val = ph[static_cast<std::size_t>((py * c.pc_pre_width() + px) * cc + ch)];
              if (val == Real(0)) continue;
              for (int ky = 0; ky < kk; ++ky) {
                for (int kx = 0; kx < kk; ++kx) {
                  const int oy = py * c.pc_stride + ky;
                  const int ox = px * c.pc_stride + kx;
                  Real* q = out.pc_q.data() + (oy * c.pc_width + ox) * a;
                  const Real* w = dw.data() + ((ch * kk + ky) * kk + kx) * a;
                  for (std::size_t ai = 0; ai < a; ++ai) q[ai] += val * w[ai];
                }
              }
            }
          }
        }
      }
    }
    if (run_rp) {
      const auto n2 = static_cast<std::size_t>(c.conv2_size());
      for (std::size_t j = 0; j < 3; ++j) {
        std::copy(tr.conv2[k - 2 + j].begin(), tr.conv2[k - 2 + j].end(), rp_in.begin() + j * n2);
      }
      affine<Real>(view(params, Block::RpW), view(params, Block::RpB), rp_in, out.rp_logits);
    }
  }

  tr.final_state.hidden = h;
  tr.final_state.cell = cell;
  std::vector<Observation> hist = state.history;
  for (const auto& f : frames) hist.push_back(f);
  if (hist.size() > 2) hist.erase(hist.begin(), hist.end() - 2);
  tr.final_state.history = std::move(hist);
  return tr;
}

template <typename Real>
void Network<Real>::backward(const Parameters<Real>& params, const ForwardTrace<Real>& tr,
                             std::span<const OutputGrad<Real>> output_grads,
                             Parameters<Real>& grads) const {
  check_params(params);
  const auto& c = config_;
  if (grads.values.empty()) grads = Parameters<Real>(c);
  check_params(grads);
  const std::size_t steps = tr.outputs.size();
  if (output_grads.size() != steps) {
    throw ShapeError("backward: " + std::to_string(output_grads.size()) +
                     " output gradients for " + std::to_string(steps) + " steps");
  }
  const auto r = static_cast<std::size_t>(c.recurrent_size);
  const auto a = static_cast<std::size_t>(c.action_count);
  const std::size_t total_frames = tr.input.size();
  const auto n2 = static_cast<std::size_t>(c.conv2_size());
  const bool has_lstm = !tr.hidden.empty();

  std::vector<std::vector<Real>> dconv2(total_frames, std::vector<Real>(n2, Real(0)));
  std::vector<Real> dh(r), dh_next(r, Real(0)), dc_next(r, Real(0)), dz(4 * r), dfc;
  std::vector<Real> dpc(static_cast<std::size_t>(c.pc_pre_size()));
  std::vector<Real> rp_in(3 * n2), drp_in(3 * n2);

  for (std::size_t ti = steps; ti-- > 0;) {
    const std::size_t k = tr.history_frames + ti;
    const auto& og = output_grads[ti];

    if ((tr.heads & kRewardPrediction) && any_nonzero<Real>(og.rp_logits)) {
      for (std::size_t j = 0; j < 3; ++j) {
        std::copy(tr.conv2[k - 2 + j].begin(), tr.conv2[k - 2 + j].end(), rp_in.begin() + j * n2);
      }
      std::fill(drp_in.begin(), drp_in.end(), Real(0));
      affine_backward<Real>(view(params, Block::RpW), rp_in, og.rp_logits,
                            view(grads, Block::RpW), view(grads, Block::RpB), drp_in);
      for (std::size_t j = 0; j < 3; ++j) {
        auto& dst = dconv2[k - 2 + j];
        for (std::size_t i = 0; i < n2; ++i) dst[i] += drp_in[j * n2 + i];
      }
    }
    if (!has_lstm) continue;

    dh = dh_next;
    const auto& h = tr.hidden[ti];
    if ((tr.heads & kPolicyValue) && !og.policy_logits.empty()) {
      affine_backward<Real>(view(params, Block::PolicyW), h, og.policy_logits,
                            view(grads, Block::PolicyW), view(grads, Block::PolicyB), dh);
    }
    if ((tr.heads & kPolicyValue) && og.value != Real(0)) {
      affine_backward<Real>(view(params, Block::ValueW), h, std::span<const Real>(&og.value, 1),
                            view(grads, Block::ValueW), view(grads, Block::ValueB), dh);
    }
    if ((tr.heads & kPixelControl) && !og.pc_q.empty() && any_nonzero<Real>(og.pc_q)) {
      const auto& ph = tr.pc_hidden[ti];
      const auto w = view(params, Block::PcDeconvW);
      auto dw = view(grads, Block::PcDeconvW);
      auto db = view(grads, Block::PcDeconvB);
      for (int pos = 0; pos < c.pc_height * c.pc_width; ++pos) {
        for (std::size_t ai = 0; ai < a; ++ai) db[ai] += og.pc_q[pos * a + ai];
      }
      std::fill(dpc.begin(), dpc.end(), Real(0));
      const int cc = c.pc_channels;
      const int kk = c.pc_kernel;
      for (int py = 0; py < c.pc_pre_height(); ++py) {
        for (int px = 0; px < c.pc_pre_width(); ++px) {
          for (int ch = 0; ch < cc; ++ch) {
            const auto idx = static_cast<std::size_t>((py * c.pc_pre_width() + px) * cc + ch);
            const Real val = ph[idx];
            if (!(val > Real(0))) continue;
            Real acc = 0;
            for (int ky = 0; ky < kk; ++ky) {
              for (int kx = 0; kx < kk; ++kx) {
                const int oy = py * c.pc_stride + ky;
                const int ox = px * c.pc_stride + kx;
                const Real* dq = og.pc_q.data() + (oy * c.pc_width + ox) * a;
                const std::size_t woff = static_cast<std::size_t>(((ch * kk + ky) * kk + kx)) * a;
                for (std::size_t ai = 0; ai < a; ++ai) {
                  dw[woff + ai] += val * dq[ai];
                  acc += w[woff + ai] * dq[ai];
                }
              }
            }
            dpc[idx] = acc;  // already masked by the ReLU test above
          }
        }
      }
      affine_backward<Real>(view(params, Block::PcFcW), h, dpc, view(grads, Block::PcFcW),
                            view(grads, Block::PcFcB), dh);
    }

    // LSTM cell.
    const auto& z = tr.gates[ti];
    const auto& cell = tr.cell[ti];
    const auto& c_prev = ti > 0 ? tr.cell[ti - 1] : tr.initial_cell;
    const auto& h_prev = ti > 0 ? tr.hidden[ti - 1] : tr.initial_hidden;
    for (std::size_t j = 0; j < r; ++j) {
      const Real i_g = z[j], f_g = z[r + j], g_g = z[2 * r + j], o_g = z[3 * r + j];
      const Real tc = std::tanh(cell[j]);
      const Real dc = dc_next[j] + dh[j] * o_g * (Real(1) - tc * tc);
      dz[j] = dc * g_g * i_g * (Real(1) - i_g);
      dz[r + j] = dc * c_prev[j] * f_g * (Real(1) - f_g);
      dz[2 * r + j] = dc * i_g * (Real(1) - g_g * g_g);
      dz[3 * r + j] = dh[j] * tc * o_g * (Real(1) - o_g);
      dc_next[j] = dc * f_g;
    }
    const auto& fc = tr.fc[ti];
    dfc.assign(fc.size(), Real(0));
    affine_backward<Real>(view(params, Block::LstmWx), fc, dz, view(grads, Block::LstmWx),
                          view(grads, Block::LstmB), dfc);
    std::fill(dh_next.begin(), dh_next.end(), Real(0));
    {
      const auto wh = view(params, Block::LstmWh);
      auto dwh = view(grads, Block::LstmWh);
      for (std::size_t row = 0; row < 4 * r; ++row) {
        const Real gv = dz[row];
        if (gv == Real(0)) continue;
        const Real* wrow = wh.data() + row * r;
        Real* drow = dwh.data() + row * r;
        for (std::size_t j = 0; j < r; ++j) {
          drow[j] += gv * h_prev[j];
          dh_next[j] += gv * wrow[j];
        }
      }
    }
    relu_mask<Real>(dfc, fc);
    affine_backward<Real>(view(params, Block::FcW), tr.conv2[k], dfc, view(grads, Block::FcW),
                          view(grads, Block::FcB), dconv2[k]);
  }

  const ConvGeom g1{c.input_height, c.input_width, 3, c.conv1.filters, c.conv1.kernel,
                    c.conv1.stride, c.conv1_height(), c.conv1_width()};
  const ConvGeom g2{g1.out_h, g1.out_w, c.conv1.filters, c.conv2.filters, c.conv2.kernel,
                    c.conv2.stride, c.conv2_height(), c.conv2_width()};
  std::vector<Real> dconv1(static_cast<std::size_t>(g1.out_h * g1.out_w * g1.filters));
  for (std::size_t k = 0; k < total_frames; ++k) {
    auto& d2 = dconv2[k];
    relu_mask<Real>(d2, tr.conv2[k]);
    if (!any_nonzero<Real>(d2)) continue;
    std::fill(dconv1.begin(), dconv1.end(), Real(0));
    conv_backward<Real>(g2, tr.conv1[k], view(params, Block::Conv2W), d2,
                        view(grads, Block::Conv2W), view(grads, Block::Conv2B), dconv1);
    relu_mask<Real>(dconv1, tr.conv1[k]);
    conv_backward<Real>(g1, tr.input[k], view(params, Block::Conv1W), dconv1,
                        view(grads, Block::Conv1W), view(grads, Block::Conv1B), {});
  }
}

template <typename Real>
GradientResult<Real> Network<Real>::gradients(const Parameters<Real>& params,
                                              std::span<const Observation> frames,
                                              const RecurrentState<Real>& state,
                                              const LossFn<Real>& loss, unsigned heads) const {
  GradientResult<Real> res;
  res.trace = forward(params, frames, state, heads);
  std::vector<OutputGrad<Real>> og(res.trace.outputs.size());
  res.loss = loss(res.trace.outputs, og);

  auto finite = [](auto&& range) {
    return std::all_of(std::begin(range), std::end(range), [](auto v) { return std::isfinite(v); });
  };
  if (!std::isfinite(res.loss.policy)) throw NonFiniteLoss("policy");
  if (!std::isfinite(res.loss.value)) throw NonFiniteLoss("value");
  if (!std::isfinite(res.loss.rp)) throw NonFiniteLoss("reward_prediction");
  if (!std::isfinite(res.loss.pc)) throw NonFiniteLoss("pixel_control");
  for (const auto& g : og) {
    if (!finite(g.policy_logits)) throw NonFiniteLoss("policy");
    if (!std::isfinite(g.value)) throw NonFiniteLoss("value");
    if (!finite(g.rp_logits)) throw NonFiniteLoss("reward_prediction");
    if (!finite(g.pc_q)) throw NonFiniteLoss("pixel_control");
  }
  res.grads = Parameters<Real>(config_);
  backward(params, res.trace, og, res.grads);
  return res;
}

template struct Parameters<float>;
template struct Parameters<double>;
template struct RecurrentState<float>;
template struct RecurrentState<double>;
template class Network<float>;
template class Network<double>;

}  // namespace unrealdc::netcore
