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

#ifndef FISHERPRUNE_FISHER_HPP_
#define FISHERPRUNE_FISHER_HPP_

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>

#include "fisherprune/common.hpp"
#include "fisherprune/network.hpp"

namespace fisherprune {

enum class UpdateRule : std::uint32_t {
  /// theta -= alpha * m_hat / (v_hat + eps), no square root.
  PaperLine7 = 0,
  /// theta -= alpha * m_hat / (sqrt(v_hat) + eps), the usual Adam step.
  StandardSqrt = 1,
};

inline const char* to_string(UpdateRule r) {
  return r == UpdateRule::PaperLine7 ? "paper_line7" : "standard_sqrt";
}

inline UpdateRule parse_update_rule(const std::string& s) {
  if (s == "paper_line7") return UpdateRule::PaperLine7;
  if (s == "standard_sqrt") return UpdateRule::StandardSqrt;
  throw Error("update_rule", "unknown rule '" + s + "'");
}

struct AdamHyper {
  double alpha = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  UpdateRule update_rule = UpdateRule::StandardSqrt;

  void validate() const {
    if (!(alpha > 0.0)) throw Error("AdamHyper", "alpha must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0)) throw Error("AdamHyper", "beta1 must be in [0, 1)");
    if (!(beta2 >= 0.0 && beta2 < 1.0)) throw Error("AdamHyper", "beta2 must be in [0, 1)");
    if (!(epsilon > 0.0)) throw Error("AdamHyper", "epsilon must be positive");
  }
};

struct AdamState {
  std::uint64_t t = 0;
  Vector m;
  Vector v;
  /// v / (1 - beta2^t) kept as a running weighted mean so that it equals
  /// g * g exactly after the first step.
  Vector v_hat;

  static AdamState zeros(std::size_t n) {
    return AdamState{0, Vector(n, 0.0), Vector(n, 0.0), Vector(n, 0.0)};
  }
};

/// Diagonal Fisher information estimate, one entry per flat parameter.
struct FisherEstimate {
  Vector values;

  std::size_t size() const noexcept { return values.size(); }
  friend bool operator==(const FisherEstimate&, const FisherEstimate&) = default;
};

namespace detail {

// Validation shared by both step entry points. Moments are still unchanged
// when this throws.
inline void check_step(const AdamState& state, std::size_t params, std::span<const double> grad,
                       const AdamHyper& hyper) {
  hyper.validate();
  check_same_length(params, grad.size(), "adam_step");
  check_same_length(state.m.size(), params, "adam_step (m)");
  check_same_length(state.v.size(), params, "adam_step (v)");
  check_same_length(state.v_hat.size(), params, "adam_step (v_hat)");
  if (!all_finite(grad)) throw Error("adam_step", "non-finite gradient");
  if (state.t == std::numeric_limits<std::uint64_t>::max())
    throw Error("adam_step", "step counter overflow");
}

}  // namespace detail

/// One Adam iteration in place: moments, bias corrections and update.
inline void adam_step_inplace(AdamState& state, std::span<double> params,
                              std::span<const double> grad, const AdamHyper& hyper) {
  detail::check_step(state, params.size(), grad, hyper);
  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double c1 = 1.0 - std::pow(hyper.beta1, t);
  const double c2 = 1.0 - std::pow(hyper.beta2, t);
  const double w = (1.0 - hyper.beta2) / c2;  // 1 at t = 1
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grad[i];
    state.m[i] = hyper.beta1 * state.m[i] + (1.0 - hyper.beta1) * g;
    state.v[i] = hyper.beta2 * state.v[i] + (1.0 - hyper.beta2) * (g * g);
    const double m_hat = state.m[i] / c1;
    state.v_hat[i] += w * (g * g - state.v_hat[i]);
    const double fisher = state.v_hat[i];
    const double denom = hyper.update_rule == UpdateRule::PaperLine7
                             ? fisher + hyper.epsilon
                             : std::sqrt(fisher) + hyper.epsilon;
    params[i] -= hyper.alpha * m_hat / denom;
  }
}

struct AdamResult {
  Vector params;
  AdamState state;
};

inline AdamResult adam_step(const AdamState& state, std::span<const double> params,
                            std::span<const double> grad, const AdamHyper& hyper) {
  AdamResult r{Vector(params.begin(), params.end()), state};
  adam_step_inplace(r.state, r.params, grad, hyper);
  return r;
}

/// Bias-corrected second moment v_t / (1 - beta2^t).
inline FisherEstimate fisher_from_state(const AdamState& state, const AdamHyper& hyper) {
  if (state.t == 0) throw Error("fisher_from_state", "no steps taken (t == 0)");
  hyper.validate();
  return FisherEstimate{state.v_hat};
}

/// Monte-Carlo estimate of E_y[g * g] with y drawn from the network's own
/// predictive distribution. Each draw contributes one single-example
/// log-likelihood gradient; the network is evaluated in inference mode.
inline FisherEstimate fisher_mc_oracle(const Network& net, const Tensor& inputs,
                                       std::size_t samples_per_input, Rng& rng) {
  if (samples_per_input == 0) throw Error("fisher_mc_oracle", "samples_per_input must be >= 1");
  FisherEstimate f{Vector(net.param_count(), 0.0)};
  const std::size_t n = inputs.rows();
  for (std::size_t s = 0; s < n; ++s) {
    Batch one{inputs.slice_rows(s, s + 1), {0}};
    const Tensor probs = forward(net, one.inputs, Mode::Infer);
    auto p = probs.row(0);
    for (std::size_t d = 0; d < samples_per_input; ++d) {
      double u = rng.uniform();
      std::uint32_t y = 0;
      while (y + 1 < p.size() && u >= p[y]) u -= p[y++];
      one.labels[0] = y;
      const Gradient g = backward(net, one, nullptr, Mode::Infer);
      for (std::size_t i = 0; i < g.grad.size(); ++i) f.values[i] += g.grad[i] * g.grad[i];
    }
  }
  const double draws = static_cast<double>(n * samples_per_input);
  for (double& v : f.values) v /= draws;
  return f;
}

/// Same estimator at observed labels (the empirical Fisher), for comparison.
inline FisherEstimate empirical_fisher(const Network& net, const Batch& data) {
  FisherEstimate f{Vector(net.param_count(), 0.0)};
  for (std::size_t s = 0; s < data.inputs.rows(); ++s) {
    Batch one{data.inputs.slice_rows(s, s + 1), {data.labels[s]}};
    const Gradient g = backward(net, one, nullptr, Mode::Infer);
    for (std::size_t i = 0; i < g.grad.size(); ++i) f.values[i] += g.grad[i] * g.grad[i];
  }
  for (double& v : f.values) v /= static_cast<double>(data.inputs.rows());
  return f;
}

}  // namespace fisherprune

#endif  // FISHERPRUNE_FISHER_HPP_
