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

#ifndef FISHERPRUNE_PRUNING_HPP_
#define FISHERPRUNE_PRUNING_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fisherprune/common.hpp"
#include "fisherprune/fisher.hpp"
#include "fisherprune/mask.hpp"
#include "fisherprune/network.hpp"

namespace fisherprune {

enum class PruneMethod { Magnitude, Fisher, Combined };

inline const char* to_string(PruneMethod m) {
  switch (m) {
    case PruneMethod::Magnitude: return "mag";
    case PruneMethod::Fisher: return "fisher";
    case PruneMethod::Combined: return "mag_fisher";
  }
  return "?";
}

/// Fisher fraction that selects each method; Combined uses the caller's r.
inline double method_ratio(PruneMethod m, double combined_r) {
  switch (m) {
    case PruneMethod::Magnitude: return 0.0;
    case PruneMethod::Fisher: return 1.0;
    case PruneMethod::Combined: return combined_r;
  }
  return combined_r;
}

inline PruneMethod parse_prune_method(const std::string& s) {
  if (s == "mag") return PruneMethod::Magnitude;
  if (s == "fisher") return PruneMethod::Fisher;
  if (s == "mag_fisher") return PruneMethod::Combined;
  throw Error("prune_method", "unknown method '" + s + "'");
}

struct PruneRequest {
  std::int64_t count = 0;  // L: parameters to remove
  double r = 0.05;         // share of L chosen by the Fisher ranking

  PruneMethod method() const {
    if (r == 0.0) return PruneMethod::Magnitude;
    if (r == 1.0) return PruneMethod::Fisher;
    return PruneMethod::Combined;
  }
};

/// Phase sizes: round-half-even of L(1 - r) by magnitude, the rest by Fisher.
struct PruneSplit {
  std::size_t magnitude = 0;
  std::size_t fisher = 0;
};

inline PruneSplit split_count(std::size_t count, double r) {
  const double mag = std::nearbyint(static_cast<double>(count) * (1.0 - r));
  const auto n_mag = static_cast<std::size_t>(std::clamp(mag, 0.0, static_cast<double>(count)));
  return {n_mag, count - n_mag};
}

/// Surviving in-scope indices ordered by ascending |value|, ties by index.
inline std::vector<std::size_t> rank_indices(std::span<const double> values,
                                             std::span<const std::size_t> scope,
                                             const PruneMask* mask = nullptr) {
  std::vector<std::size_t> order;
  order.reserve(scope.size());
  for (std::size_t i : scope) {
    if (i >= values.size()) throw Error("rank_indices", "scope index out of range");
    if (!mask || mask->kept(i)) order.push_back(i);
  }
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double va = std::abs(values[a]), vb = std::abs(values[b]);
    return va != vb ? va < vb : a < b;
  });
  return order;
}

/// Two-phase removal: the round(L(1-r)) smallest-magnitude in-scope
/// parameters, then the remaining count with the smallest Fisher entries among
/// the survivors. Fisher ties fall back to |theta|, then to flat index.
inline PruneMask prune(std::span<const double> params, const FisherEstimate& fisher,
                       const PruneRequest& req, std::span<const std::size_t> scope) {
  check_same_length(fisher.size(), params.size(), "prune (fisher)");
  if (req.count < 0) throw Error("prune", "negative removal count");
  if (!(req.r >= 0.0 && req.r <= 1.0)) throw Error("prune", "r outside [0, 1]");
  const auto count = static_cast<std::size_t>(req.count);
  if (count > scope.size())
    throw Error("prune", "cannot remove " + std::to_string(count) + " of " +
                             std::to_string(scope.size()) + " in-scope parameters");

  PruneMask mask = PruneMask::all_kept(params.size(), {scope.begin(), scope.end()});
  const PruneSplit split = split_count(count, req.r);

  const std::vector<std::size_t> by_magnitude = rank_indices(params, scope);
  for (std::size_t i = 0; i < split.magnitude; ++i) mask.keep[by_magnitude[i]] = 0;

  if (split.fisher > 0) {
    std::vector<std::size_t> rest(by_magnitude.begin() + static_cast<std::ptrdiff_t>(split.magnitude),
                                  by_magnitude.end());
    const auto& f = fisher.values;
    std::partial_sort(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(split.fisher),
                      rest.end(), [&](std::size_t a, std::size_t b) {
                        if (f[a] != f[b]) return f[a] < f[b];
                        const double ma = std::abs(params[a]), mb = std::abs(params[b]);
                        return ma != mb ? ma < mb : a < b;
                      });
    for (std::size_t i = 0; i < split.fisher; ++i) mask.keep[rest[i]] = 0;
  }
  return mask;
}

struct PruneSweepRow {
  std::int64_t count = 0;
  double fraction_removed = 0.0;
  double accuracy = 0.0;
  double test_score = 0.0;
  PruneMethod method = PruneMethod::Magnitude;
  double r = 0.0;
};

/// Evaluates an independent mask per L, each built from the unpruned
/// parameters of `net`.
inline std::vector<PruneSweepRow> sweep_prune(const Network& net, const FisherEstimate& fisher,
                                              std::span<const std::int64_t> counts, double r,
                                              const Tensor& eval_inputs,
                                              std::span<const std::uint32_t> eval_labels) {
  if (!std::is_sorted(counts.begin(), counts.end()))
    throw Error("sweep_prune", "L values must be ascending");
  const auto& scope = net.fc_scope();
  std::vector<PruneSweepRow> rows;
  rows.reserve(counts.size());
  Network work = net;
  for (std::int64_t count : counts) {
    PruneRequest req{count, r};
    work.set_mask(prune(net.params(), fisher, req, scope));
    const EvalResult e = evaluate(work, eval_inputs, eval_labels);
    rows.push_back({count,
                    static_cast<double>(count) / static_cast<double>(scope.size()),
                    e.accuracy, e.test_score, req.method(), r});
  }
  return rows;
}

}  // namespace fisherprune

#endif  // FISHERPRUNE_PRUNING_HPP_
