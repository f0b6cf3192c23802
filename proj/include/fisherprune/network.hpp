/* Copyright 2026 The fisherprune Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef FISHERPRUNE_NETWORK_HPP_
#define FISHERPRUNE_NETWORK_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fisherprune/common.hpp"
#include "fisherprune/mask.hpp"
#include "fisherprune/tensor.hpp"

namespace fisherprune {

// Values are part of the model file format; do not renumber.
enum class LayerKind : std::uint32_t {
  Dense = 0,
  Conv2D = 1,
  MaxPool2x2 = 2,
  ReLU = 3,
  Dropout = 4,
  Softmax = 5,
};

inline const char* to_string(LayerKind k) {
  switch (k) {
    case LayerKind::Dense: return "Dense";
    case LayerKind::Conv2D: return "Conv2D";
    case LayerKind::MaxPool2x2: return "MaxPool2x2";
    case LayerKind::ReLU: return "ReLU";
    case LayerKind::Dropout: return "Dropout";
    case LayerKind::Softmax: return "Softmax";
  }
  return "?";
}

inline constexpr std::size_t kConvKernel = 3;

struct Layer {
  LayerKind kind = LayerKind::ReLU;
  std::size_t in_dim = 0;        // Dense: inputs; Conv2D: input channels
  std::size_t out_dim = 0;       // Dense: outputs; Conv2D: filters
  double drop_rate = 0.0;        // Dropout: probability of zeroing a unit

  static Layer dense(std::size_t in, std::size_t out) {
    return {LayerKind::Dense, in, out, 0.0};
  }
  static Layer conv2d(std::size_t in_channels, std::size_t filters) {
    return {LayerKind::Conv2D, in_channels, filters, 0.0};
  }
  static Layer max_pool() { return {LayerKind::MaxPool2x2, 0, 0, 0.0}; }
  static Layer relu() { return {LayerKind::ReLU, 0, 0, 0.0}; }
  static Layer dropout(double rate) { return {LayerKind::Dropout, 0, 0, rate}; }
  static Layer softmax() { return {LayerKind::Softmax, 0, 0, 0.0}; }

  std::size_t weight_count() const {
    switch (kind) {
      case LayerKind::Dense: return in_dim * out_dim;
      case LayerKind::Conv2D: return out_dim * in_dim * kConvKernel * kConvKernel;
      default: return 0;
    }
  }
  std::size_t param_count() const {
    const std::size_t w = weight_count();
    return w == 0 ? 0 : w + out_dim;
  }

  friend bool operator==(const Layer&, const Layer&) = default;
};

enum class Mode { Train, Infer };

struct Batch {
  Tensor inputs;                      // [n, sample shape...]
  std::vector<std::uint32_t> labels;  // class ids
};

/// Ordered layer stack over one flat parameter vector.
///
/// Each parameterized layer owns the contiguous slice
/// [offset(l), offset(l) + param_count) laid out as weights (row-major,
/// Dense [out][in], Conv2D [filter][channel][kh][kw]) followed by biases.
class Network {
 public:
  Network() = default;

  /// Builds the shape chain and leaves every parameter at zero.
  Network(Shape input_shape, std::vector<Layer> layers)
      : input_shape_(std::move(input_shape)), layers_(std::move(layers)) {
    if (input_shape_.empty() || shape_size(input_shape_) == 0)
      throw Error("Network", "empty input shape");
    if (layers_.empty()) throw Error("Network", "no layers");
    shapes_.push_back(input_shape_);
    std::size_t offset = 0;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      offsets_.push_back(offset);
      shapes_.push_back(output_shape(l, shapes_.back()));
      offset += layers_[l].param_count();
      if (layers_[l].kind == LayerKind::Dense)
        for (std::size_t i = offsets_[l]; i < offset; ++i) fc_scope_.push_back(i);
    }
    offsets_.push_back(offset);
    params_.assign(offset, 0.0);
  }

  /// Builds and initializes weights uniformly in +-sqrt(6 / (fan_in + fan_out));
  /// biases start at zero.
  Network(Shape input_shape, std::vector<Layer> layers, Rng& rng)
      : Network(std::move(input_shape), std::move(layers)) {
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const Layer& L = layers_[l];
      if (L.param_count() == 0) continue;
      const std::size_t area =
          L.kind == LayerKind::Conv2D ? kConvKernel * kConvKernel : 1;
      const double limit =
          std::sqrt(6.0 / static_cast<double>((L.in_dim + L.out_dim) * area));
      for (std::size_t i = 0; i < L.weight_count(); ++i)
        params_[offsets_[l] + i] = rng.uniform(-limit, limit);
    }
  }

  const Shape& input_shape() const noexcept { return input_shape_; }
  const std::vector<Layer>& layers() const noexcept { return layers_; }
  const Layer& layer(std::size_t l) const { return layers_.at(l); }
  std::size_t layer_count() const noexcept { return layers_.size(); }

  /// Per-sample shape entering layer l; shape(layer_count()) is the output.
  const Shape& shape(std::size_t l) const { return shapes_.at(l); }
  std::size_t output_size() const { return shape_size(shapes_.back()); }

  Vector& params() noexcept { return params_; }
  const Vector& params() const noexcept { return params_; }
  std::size_t param_count() const noexcept { return params_.size(); }

  std::size_t offset(std::size_t l) const { return offsets_.at(l); }

  std::size_t flat_index(std::size_t l, std::size_t local) const {
    if (local >= layers_.at(l).param_count())
      throw Error(layer_name(l), "local offset out of range");
    return offsets_[l] + local;
  }

  /// Inverse of flat_index.
  std::pair<std::size_t, std::size_t> locate(std::size_t flat) const {
    if (flat >= params_.size()) throw Error("Network::locate", "flat index out of range");
    auto it = std::upper_bound(offsets_.begin(), offsets_.end() - 1, flat);
    std::size_t l = static_cast<std::size_t>(it - offsets_.begin()) - 1;
    while (layers_[l].param_count() == 0) --l;
    return {l, flat - offsets_[l]};
  }

  /// Flat indices of all Dense weights and biases, ascending.
  const std::vector<std::size_t>& fc_scope() const noexcept { return fc_scope_; }

  std::string layer_name(std::size_t l) const {
    return "layer " + std::to_string(l) + " (" + to_string(layers_.at(l).kind) + ")";
  }

  void set_mask(const PruneMask& mask) {
    check_same_length(mask.size(), params_.size(), "Network::set_mask");
    mask_ = mask;
  }
  void clear_mask() { mask_.reset(); }
  const std::optional<PruneMask>& mask() const noexcept { return mask_; }

  /// Parameters as seen by forward/backward: masked entries read as 0.
  Vector effective_params() const {
    Vector p = params_;
    if (mask_)
      for (std::size_t i = 0; i < p.size(); ++i)
        if (!mask_->keep[i]) p[i] = 0.0;
    return p;
  }

 private:
  Shape output_shape(std::size_t l, const Shape& in) const {
    const Layer& L = layers_[l];
    auto fail = [&](const std::string& msg) { return Error(layer_name(l), msg); };
    switch (L.kind) {
      case LayerKind::Dense:
        if (L.in_dim == 0 || L.out_dim == 0) throw fail("zero dimension");
        if (shape_size(in) != L.in_dim)
          throw fail("expects " + std::to_string(L.in_dim) + " inputs, got " +
                     shape_string(in));
        return {L.out_dim};
      case LayerKind::Conv2D:
        if (L.in_dim == 0 || L.out_dim == 0) throw fail("zero channels");
        if (in.size() != 3 || in[0] != L.in_dim)
          throw fail("expects [" + std::to_string(L.in_dim) + ", H, W], got " +
                     shape_string(in));
        if (in[1] < kConvKernel || in[2] < kConvKernel) throw fail("input smaller than kernel");
        return {L.out_dim, in[1] - kConvKernel + 1, in[2] - kConvKernel + 1};
      case LayerKind::MaxPool2x2:
        if (in.size() != 3 || in[1] < 2 || in[2] < 2)
          throw fail("expects [C, H>=2, W>=2], got " + shape_string(in));
        return {in[0], in[1] / 2, in[2] / 2};
      case LayerKind::Dropout:
        if (!(L.drop_rate >= 0.0 && L.drop_rate < 1.0)) throw fail("rate outside [0, 1)");
        return in;
      case LayerKind::ReLU:
      case LayerKind::Softmax:
        return in;
    }
    throw fail("unknown layer kind");
  }

  Shape input_shape_;
  std::vector<Layer> layers_;
  std::vector<Shape> shapes_;
  std::vector<std::size_t> offsets_;
  std::vector<std::size_t> fc_scope_;
  Vector params_;
  std::optional<PruneMask> mask_;
};

/// Same architecture, same parameters, same mask.
inline bool same_model(const Network& a, const Network& b) {
  return a.input_shape() == b.input_shape() && a.layers() == b.layers() &&
         a.params() == b.params() && a.mask() == b.mask();
}

inline void apply_mask_forward_hook(Network& net, const PruneMask& mask) { net.set_mask(mask); }

inline constexpr double kProbabilityFloor = 1e-12;

/// Negative log-likelihood summed over the batch, probabilities clamped at
/// kProbabilityFloor.
inline double cross_entropy(const Tensor& probs, std::span<const std::uint32_t> labels) {
  if (probs.rank() != 2) throw Error("cross_entropy", "expects [n, C] probabilities");
  check_same_length(probs.rows(), labels.size(), "cross_entropy");
  const std::size_t classes = probs.dim(1);
  double loss = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= classes)
      throw Error("cross_entropy", "label " + std::to_string(labels[i]) + " out of range");
    loss -= std::log(std::max(probs.at(i, labels[i]), kProbabilityFloor));
  }
  return loss;
}

namespace detail {

// Everything backward needs from the paired forward pass.
struct Trace {
  std::vector<Vector> acts;                       // acts[l] enters layer l
  std::vector<Vector> dropout_scale;              // per layer, empty unless used
  std::vector<std::vector<std::uint32_t>> argmax; // per max-pool layer
};

inline void dense_forward(const Layer& L, const double* w, std::size_t n, const Vector& x,
                          Vector& y) {
  const std::size_t in = L.in_dim, out = L.out_dim;
  const double* b = w + in * out;
  y.assign(n * out, 0.0);
  for (std::size_t s = 0; s < n; ++s) {
    const double* xs = x.data() + s * in;
    double* ys = y.data() + s * out;
    for (std::size_t o = 0; o < out; ++o) {
      const double* wo = w + o * in;
      double acc = 0.0;
      for (std::size_t i = 0; i < in; ++i) acc += wo[i] * xs[i];
      ys[o] = acc + b[o];
    }
  }
}

inline void dense_backward(const Layer& L, const double* w, std::size_t n, const Vector& x,
                           const Vector& dy, double* dw, Vector& dx, bool need_dx) {
  const std::size_t in = L.in_dim, out = L.out_dim;
  double* db = dw + in * out;
  if (need_dx) dx.assign(n * in, 0.0);
  for (std::size_t s = 0; s < n; ++s) {
    const double* xs = x.data() + s * in;
    const double* dys = dy.data() + s * out;
    for (std::size_t o = 0; o < out; ++o) {
      const double g = dys[o];
      if (g == 0.0) continue;
      double* dwo = dw + o * in;
      for (std::size_t i = 0; i < in; ++i) dwo[i] += g * xs[i];
      db[o] += g;
      if (need_dx) {
        const double* wo = w + o * in;
        double* dxs = dx.data() + s * in;
        for (std::size_t i = 0; i < in; ++i) dxs[i] += g * wo[i];
      }
    }
  }
}

inline void conv_forward(const Layer& L, const Shape& in_shape, const double* w, std::size_t n,
                         const Vector& x, Vector& y) {
  const std::size_t C = L.in_dim, F = L.out_dim, H = in_shape[1], W = in_shape[2];
  const std::size_t OH = H - 2, OW = W - 2, K = kConvKernel;
  const double* b = w + F * C * K * K;
  y.assign(n * F * OH * OW, 0.0);
  for (std::size_t s = 0; s < n; ++s) {
    const double* xs = x.data() + s * C * H * W;
    double* ys = y.data() + s * F * OH * OW;
    for (std::size_t f = 0; f < F; ++f) {
      double* yf = ys + f * OH * OW;
      for (std::size_t p = 0; p < OH * OW; ++p) yf[p] = b[f];
      for (std::size_t c = 0; c < C; ++c) {
        const double* xc = xs + c * H * W;
        const double* k = w + (f * C + c) * K * K;
        for (std::size_t kh = 0; kh < K; ++kh)
          for (std::size_t kw = 0; kw < K; ++kw) {
            const double kv = k[kh * K + kw];
            for (std::size_t oh = 0; oh < OH; ++oh) {
              const double* xr = xc + (oh + kh) * W + kw;
              double* yr = yf + oh * OW;
              for (std::size_t ow = 0; ow < OW; ++ow) yr[ow] += kv * xr[ow];
            }
          }
      }
    }
  }
}

inline void conv_backward(const Layer& L, const Shape& in_shape, const double* w, std::size_t n,
                          const Vector& x, const Vector& dy, double* dw, Vector& dx,
                          bool need_dx) {
  const std::size_t C = L.in_dim, F = L.out_dim, H = in_shape[1], W = in_shape[2];
  const std::size_t OH = H - 2, OW = W - 2, K = kConvKernel;
  double* db = dw + F * C * K * K;
  if (need_dx) dx.assign(n * C * H * W, 0.0);
  for (std::size_t s = 0; s < n; ++s) {
    const double* xs = x.data() + s * C * H * W;
    const double* dys = dy.data() + s * F * OH * OW;
    for (std::size_t f = 0; f < F; ++f) {
      const double* dyf = dys + f * OH * OW;
      for (std::size_t p = 0; p < OH * OW; ++p) db[f] += dyf[p];
      for (std::size_t c = 0; c < C; ++c) {
        const double* xc = xs + c * H * W;
        const double* k = w + (f * C + c) * K * K;
        double* dk = dw + (f * C + c) * K * K;
        double* dxc = need_dx ? dx.data() + s * C * H * W + c * H * W : nullptr;
        for (std::size_t kh = 0; kh < K; ++kh)
          for (std::size_t kw = 0; kw < K; ++kw) {
            const double kv = k[kh * K + kw];
            double acc = 0.0;
            for (std::size_t oh = 0; oh < OH; ++oh) {
              const double* xr = xc + (oh + kh) * W + kw;
              const double* dyr = dyf + oh * OW;
              for (std::size_t ow = 0; ow < OW; ++ow) acc += dyr[ow] * xr[ow];
              if (dxc) {
                double* dxr = dxc + (oh + kh) * W + kw;
                for (std::size_t ow = 0; ow < OW; ++ow) dxr[ow] += kv * dyr[ow];
              }
            }
            dk[kh * K + kw] += acc;
          }
      }
    }
  }
}

inline void softmax_rows(std::size_t n, std::size_t width, const Vector& x, Vector& y) {
  y.resize(n * width);
  for (std::size_t s = 0; s < n; ++s) {
    const double* xs = x.data() + s * width;
    double* ys = y.data() + s * width;
    const double mx = *std::max_element(xs, xs + width);
    double sum = 0.0;
    for (std::size_t j = 0; j < width; ++j) sum += (ys[j] = std::exp(xs[j] - mx));
    for (std::size_t j = 0; j < width; ++j) ys[j] /= sum;
  }
}

/// Runs the stack. With a trace, records what backward needs.
inline Tensor run_forward(const Network& net, const Vector& params, const Tensor& inputs,
                          Mode mode, Rng* rng, Trace* trace) {
  const Shape& in_shape = net.input_shape();
  if (inputs.rank() < 1 || inputs.rows() == 0)
    throw Error(net.layer_name(0), "empty batch");
  if (inputs.row_size() != shape_size(in_shape))
    throw Error(net.layer_name(0), "input sample shape " +
                                       shape_string(Shape(inputs.shape().begin() + 1,
                                                          inputs.shape().end())) +
                                       " does not match " + shape_string(in_shape));
  const std::size_t n = inputs.rows();
  Vector cur = inputs.data();
  if (trace) {
    trace->acts.clear();
    trace->dropout_scale.assign(net.layer_count(), {});
    trace->argmax.assign(net.layer_count(), {});
  }
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    const Layer& L = net.layer(l);
    const Shape& s_in = net.shape(l);
    const double* w = params.data() + net.offset(l);
    Vector next;
    switch (L.kind) {
      case LayerKind::Dense: dense_forward(L, w, n, cur, next); break;
      case LayerKind::Conv2D: conv_forward(L, s_in, w, n, cur, next); break;
      case LayerKind::ReLU:
        next = cur;
        for (double& v : next) v = v > 0.0 ? v : 0.0;
        break;
      case LayerKind::Softmax: softmax_rows(n, shape_size(s_in), cur, next); break;
      case LayerKind::Dropout:
        next = cur;
        if (mode == Mode::Train && L.drop_rate > 0.0) {
          if (!rng) throw Error(net.layer_name(l), "train mode needs a random stream");
          const double keep = 1.0 - L.drop_rate;
          Vector scale(cur.size());
          for (double& m : scale) m = rng->uniform() < keep ? 1.0 / keep : 0.0;
          for (std::size_t i = 0; i < next.size(); ++i) next[i] *= scale[i];
          if (trace) trace->dropout_scale[l] = std::move(scale);
        }
        break;
      case LayerKind::MaxPool2x2: {
        const std::size_t C = s_in[0], H = s_in[1], W = s_in[2], OH = H / 2, OW = W / 2;
        next.assign(n * C * OH * OW, 0.0);
        std::vector<std::uint32_t> arg(next.size());
        for (std::size_t s = 0; s < n; ++s)
          for (std::size_t c = 0; c < C; ++c) {
            const std::size_t base = (s * C + c) * H * W;
            for (std::size_t oh = 0; oh < OH; ++oh)
              for (std::size_t ow = 0; ow < OW; ++ow) {
                std::size_t best = base + 2 * oh * W + 2 * ow;
                for (std::size_t dh = 0; dh < 2; ++dh)
                  for (std::size_t dw = 0; dw < 2; ++dw) {
                    const std::size_t idx = base + (2 * oh + dh) * W + 2 * ow + dw;
                    if (cur[idx] > cur[best]) best = idx;
                  }
                const std::size_t o = ((s * C + c) * OH + oh) * OW + ow;
                next[o] = cur[best];
                arg[o] = static_cast<std::uint32_t>(best);
              }
          }
        if (trace) trace->argmax[l] = std::move(arg);
        break;
      }
    }
    if (trace) trace->acts.push_back(std::move(cur));
    cur = std::move(next);
  }
  Shape out_shape{n};
  const Shape& tail = net.shape(net.layer_count());
  out_shape.insert(out_shape.end(), tail.begin(), tail.end());
  if (trace) trace->acts.push_back(cur);
  return Tensor(std::move(out_shape), std::move(cur));
}

}  // namespace detail

/// Class probabilities [n, C]. Train mode realizes dropout from `rng`.
inline Tensor forward(const Network& net, const Tensor& inputs, Mode mode, Rng* rng = nullptr) {
  Tensor out = detail::run_forward(net, net.effective_params(), inputs, mode, rng, nullptr);
  return out.reshaped({out.rows(), out.row_size()});
}

inline Tensor forward(const Network& net, const Batch& batch, Mode mode, Rng* rng = nullptr) {
  return forward(net, batch.inputs, mode, rng);
}

struct Gradient {
  Vector grad;   // aligned to the flat parameter index
  double loss = 0.0;
};

/// Gradient of the summed cross-entropy (negative log-likelihood) over the
/// batch. The dropout mask is realized once and shared by both passes.
/// When the final layer is Softmax, its backward is fused with the loss.
inline Gradient backward(const Network& net, const Batch& batch, Rng* rng,
                         Mode mode = Mode::Train) {
  const Vector params = net.effective_params();
  detail::Trace trace;
  Tensor out = detail::run_forward(net, params, batch.inputs, mode, rng, &trace);
  const std::size_t n = out.rows(), classes = out.row_size();
  Tensor probs = out.reshaped({n, classes});
  Gradient result;
  result.loss = cross_entropy(probs, batch.labels);
  result.grad.assign(net.param_count(), 0.0);

  const std::size_t last = net.layer_count() - 1;
  const bool fused = net.layer(last).kind == LayerKind::Softmax;
  Vector delta(n * classes, 0.0);
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t y = batch.labels[s];
    if (fused) {
      for (std::size_t j = 0; j < classes; ++j) delta[s * classes + j] = probs.at(s, j);
      delta[s * classes + y] -= 1.0;
    } else {
      const double p = probs.at(s, y);
      if (p >= kProbabilityFloor) delta[s * classes + y] = -1.0 / p;
    }
  }

  std::size_t l = fused ? last : last + 1;
  while (l-- > 0) {
    const Layer& L = net.layer(l);
    const Vector& x = trace.acts[l];
    const bool need_dx = l > 0;
    Vector dx;
    double* dw = result.grad.data() + net.offset(l);
    const double* w = params.data() + net.offset(l);
    switch (L.kind) {
      case LayerKind::Dense: detail::dense_backward(L, w, n, x, delta, dw, dx, need_dx); break;
      case LayerKind::Conv2D:
        detail::conv_backward(L, net.shape(l), w, n, x, delta, dw, dx, need_dx);
        break;
      case LayerKind::ReLU:
        dx = std::move(delta);
        for (std::size_t i = 0; i < dx.size(); ++i)
          if (!(x[i] > 0.0)) dx[i] = 0.0;
        break;
      case LayerKind::Dropout:
        dx = std::move(delta);
        if (!trace.dropout_scale[l].empty())
          for (std::size_t i = 0; i < dx.size(); ++i) dx[i] *= trace.dropout_scale[l][i];
        break;
      case LayerKind::Softmax: {
        const Vector& y = trace.acts[l + 1];
        const std::size_t width = shape_size(net.shape(l));
        dx.assign(delta.size(), 0.0);
        for (std::size_t s = 0; s < n; ++s) {
          double dot = 0.0;
          for (std::size_t j = 0; j < width; ++j) dot += y[s * width + j] * delta[s * width + j];
          for (std::size_t j = 0; j < width; ++j)
            dx[s * width + j] = y[s * width + j] * (delta[s * width + j] - dot);
        }
        break;
      }
      case LayerKind::MaxPool2x2: {
        dx.assign(x.size(), 0.0);
        const auto& arg = trace.argmax[l];
        for (std::size_t o = 0; o < arg.size(); ++o) dx[arg[o]] += delta[o];
        break;
      }
    }
    delta = std::move(dx);
  }

  if (const auto& mask = net.mask())
    for (std::size_t i = 0; i < result.grad.size(); ++i)
      if (!mask->keep[i]) result.grad[i] = 0.0;
  return result;
}

/// Loss only, evaluated exactly as backward would (same dropout draw for the
/// same stream state). Used by finite-difference checks.
inline double loss(const Network& net, const Batch& batch, Rng* rng, Mode mode = Mode::Train) {
  return cross_entropy(forward(net, batch.inputs, mode, rng), batch.labels);
}

inline std::size_t argmax_row(const Tensor& probs, std::size_t r) {
  auto row = probs.row(r);
  return static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
}

struct EvalResult {
  double accuracy = 0.0;    // top-1 match rate
  double test_score = 0.0;  // cross-entropy per example
  std::size_t count = 0;

  friend bool operator==(const EvalResult&, const EvalResult&) = default;
};

/// Inference-mode accuracy and mean cross-entropy, evaluated in chunks.
inline EvalResult evaluate(const Network& net, const Tensor& inputs,
                           std::span<const std::uint32_t> labels, std::size_t chunk = 500) {
  check_same_length(inputs.rows(), labels.size(), "evaluate");
  if (labels.empty()) throw Error("evaluate", "empty evaluation set");
  EvalResult r;
  std::size_t hits = 0;
  double total = 0.0;
  for (std::size_t b = 0; b < labels.size(); b += chunk) {
    const std::size_t e = std::min(labels.size(), b + chunk);
    const Tensor probs = forward(net, inputs.slice_rows(b, e), Mode::Infer);
    total += cross_entropy(probs, labels.subspan(b, e - b));
    for (std::size_t i = b; i < e; ++i) hits += argmax_row(probs, i - b) == labels[i];
  }
  r.count = labels.size();
  r.accuracy = static_cast<double>(hits) / static_cast<double>(r.count);
  r.test_score = total / static_cast<double>(r.count);
  return r;
}

// Architecture presets.

/// The MNIST CNN: two 32-filter valid 3x3 convolutions, 2x2 max-pool,
/// dropout 0.25, dense 128 + dropout 0.5, dense 10 softmax.
inline std::vector<Layer> paper_cnn_layers() {
  return {Layer::conv2d(1, 32),   Layer::relu(),       Layer::conv2d(32, 32),
          Layer::relu(),          Layer::max_pool(),   Layer::dropout(0.25),
          Layer::dense(4608, 128), Layer::relu(),      Layer::dropout(0.5),
          Layer::dense(128, 10),  Layer::softmax()};
}
inline Shape paper_cnn_input() { return {1, 28, 28}; }

/// Desk-scale 784-128-10 perceptron with input and hidden dropout.
inline std::vector<Layer> small_mlp_layers() {
  return {Layer::dropout(0.2), Layer::dense(784, 128), Layer::relu(),
          Layer::dropout(0.5), Layer::dense(128, 10), Layer::softmax()};
}
inline Shape small_mlp_input() { return {784}; }

}  // namespace fisherprune

#endif  // FISHERPRUNE_NETWORK_HPP_
