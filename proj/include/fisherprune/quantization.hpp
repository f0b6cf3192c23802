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

#ifndef FISHERPRUNE_QUANTIZATION_HPP_
#define FISHERPRUNE_QUANTIZATION_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "fisherprune/common.hpp"
#include "fisherprune/mask.hpp"

namespace fisherprune {

// ---------------------------------------------------------------------------
// 1-D k-means
// ---------------------------------------------------------------------------

struct KMeansResult {
  std::vector<std::uint32_t> assignments;  // cluster id per input value
  Vector centroids;                        // ascending
  double objective = 0.0;                  // sum of squared distances
  Vector history;                          // objective at init, then per iteration
  std::size_t iterations = 0;
};

namespace detail {

inline std::uint32_t nearest_centroid(const Vector& c, double x) {
  std::uint32_t best = 0;
  double best_d = std::abs(x - c[0]);
  for (std::uint32_t j = 1; j < c.size(); ++j) {
    const double d = std::abs(x - c[j]);
    if (d < best_d) {
      best_d = d;
      best = j;
    }
  }
  return best;
}

inline double sse(std::span<const double> values, const std::vector<std::uint32_t>& assign,
                  const Vector& c) {
  double s = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double d = values[i] - c[assign[i]];
    s += d * d;
  }
  return s;
}

inline std::size_t count_distinct(Vector sorted) {
  return static_cast<std::size_t>(std::unique(sorted.begin(), sorted.end()) - sorted.begin());
}

}  // namespace detail

/// Lloyd's algorithm on scalars. Centroid j starts at the (j + 0.5)/k
/// quantile of the sorted values; no randomness. k is clamped to the number
/// of distinct values. Ties in assignment go to the lower centroid, and an
/// empty cluster keeps its previous centroid.
inline KMeansResult kmeans_1d(std::span<const double> values, std::size_t k,
                              std::size_t max_iters = 100, double tol = 0.0) {
  if (values.empty()) throw Error("kmeans_1d", "empty input");
  if (k == 0) throw Error("kmeans_1d", "k must be >= 1");
  if (!all_finite(values)) throw Error("kmeans_1d", "non-finite value");
  Vector sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  k = std::min(k, detail::count_distinct(sorted));
  const std::size_t n = sorted.size();

  KMeansResult r;
  r.centroids.resize(k);
  for (std::size_t j = 0; j < k; ++j) {
    const auto q = static_cast<std::size_t>((static_cast<double>(j) + 0.5) *
                                            static_cast<double>(n) / static_cast<double>(k));
    r.centroids[j] = sorted[std::min(q, n - 1)];
  }
  r.assignments.resize(values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    r.assignments[i] = detail::nearest_centroid(r.centroids, values[i]);
  r.objective = detail::sse(values, r.assignments, r.centroids);
  r.history.push_back(r.objective);

  Vector sum(k);
  std::vector<std::size_t> cnt(k);
  while (r.iterations < max_iters) {
    std::fill(sum.begin(), sum.end(), 0.0);
    std::fill(cnt.begin(), cnt.end(), 0);
    for (std::size_t i = 0; i < values.size(); ++i) {
      sum[r.assignments[i]] += values[i];
      ++cnt[r.assignments[i]];
    }
    for (std::size_t j = 0; j < k; ++j)
      if (cnt[j]) r.centroids[j] = sum[j] / static_cast<double>(cnt[j]);
    bool changed = false;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const std::uint32_t a = detail::nearest_centroid(r.centroids, values[i]);
      changed |= a != r.assignments[i];
      r.assignments[i] = a;
    }
    ++r.iterations;
    const double obj = detail::sse(values, r.assignments, r.centroids);
    const double gain = r.objective - obj;
    r.objective = obj;
    r.history.push_back(obj);
    if (!changed || gain <= tol * std::max(1.0, std::abs(obj))) break;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Codebooks
// ---------------------------------------------------------------------------

enum class CodebookKind : std::uint32_t {
  Affine = 0,  // 2^b evenly spaced levels over [lo, hi]
  KMeans = 1,  // up to 2^b levels from 1-D k-means on the group's values
};

inline const char* to_string(CodebookKind k) {
  return k == CodebookKind::Affine ? "affine" : "kmeans";
}

inline CodebookKind parse_codebook(const std::string& s) {
  if (s == "affine") return CodebookKind::Affine;
  if (s == "kmeans") return CodebookKind::KMeans;
  throw Error("codebook", "unknown codebook '" + s + "'");
}

/// Reconstruction levels for one group, sorted ascending. Affine levels are
/// computed on demand so 32-bit depths need no table.
struct Codebook {
  CodebookKind kind = CodebookKind::Affine;
  std::uint32_t bits = 1;
  double lo = 0.0;
  double hi = 0.0;
  Vector table;  // KMeans only

  static Codebook affine(double lo, double hi, std::uint32_t bits) {
    if (bits < 1 || bits > 32) throw Error("Codebook", "bit depth must be in [1, 32]");
    if (!(lo <= hi)) throw Error("Codebook", "lo > hi");
    return Codebook{CodebookKind::Affine, bits, lo, hi, {}};
  }

  static Codebook from_table(Vector levels, std::uint32_t bits) {
    if (levels.empty()) throw Error("Codebook", "empty level table");
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    if (levels.size() > (std::uint64_t{1} << bits))
      throw Error("Codebook", "more levels than the bit depth allows");
    return Codebook{CodebookKind::KMeans, bits, levels.front(), levels.back(), std::move(levels)};
  }

  /// Distinct reconstruction values addressable by an index.
  std::uint64_t level_count() const {
    if (kind == CodebookKind::KMeans) return table.size();
    return lo == hi ? 1 : std::uint64_t{1} << bits;
  }

  double level(std::uint64_t i) const {
    if (kind == CodebookKind::KMeans) return table[i];
    const std::uint64_t n = level_count();
    if (i == 0) return lo;
    if (i + 1 == n) return hi;
    return lo + static_cast<double>(i) * ((hi - lo) / static_cast<double>(n - 1));
  }

  /// Nearest level; an exact midpoint goes to the lower level.
  std::uint64_t encode(double x) const {
    const std::uint64_t n = level_count();
    if (n == 1) return 0;
    std::uint64_t i0;
    if (kind == CodebookKind::KMeans) {
      auto it = std::upper_bound(table.begin(), table.end(), x);
      i0 = it == table.begin() ? 0 : static_cast<std::uint64_t>(it - table.begin()) - 1;
    } else {
      const double t = (x - lo) / ((hi - lo) / static_cast<double>(n - 1));
      i0 = t <= 0.0 ? 0 : std::min<std::uint64_t>(static_cast<std::uint64_t>(t), n - 1);
    }
    if (i0 + 1 >= n) return n - 1;
    if (i0 > 0 && std::abs(x - level(i0 - 1)) <= std::abs(x - level(i0))) --i0;
    return std::abs(x - level(i0)) <= std::abs(x - level(i0 + 1)) ? i0 : i0 + 1;
  }

  double quantize(double x) const { return level(encode(x)); }

  /// Bits needed to store one index (0 for a single-level codebook).
  std::uint32_t index_bits() const {
    std::uint32_t b = 0;
    while ((std::uint64_t{1} << b) < level_count()) ++b;
    return b;
  }

  friend bool operator==(const Codebook&, const Codebook&) = default;
};

// ---------------------------------------------------------------------------
// Plans
// ---------------------------------------------------------------------------

enum class ImportanceMetric : std::uint32_t { Fisher = 0, Magnitude = 1, Uniform = 2 };

inline const char* to_string(ImportanceMetric m) {
  switch (m) {
    case ImportanceMetric::Fisher: return "fisher_quant";
    case ImportanceMetric::Magnitude: return "mag_quant";
    case ImportanceMetric::Uniform: return "uniform";
  }
  return "?";
}

struct ImportanceGroup {
  std::vector<std::size_t> members;  // ascending flat indices
  double centroid = 0.0;             // mean importance of the members
  std::uint32_t bits = 1;
  Codebook codebook;

  friend bool operator==(const ImportanceGroup&, const ImportanceGroup&) = default;
};

struct QuantizationPlan {
  std::vector<ImportanceGroup> groups;  // ascending centroid, bits 1..k
  ImportanceMetric metric = ImportanceMetric::Fisher;
  std::uint32_t float_width = 32;
  std::uint32_t requested_groups = 0;   // k as asked; groups.size() may be smaller

  std::size_t member_count() const {
    std::size_t n = 0;
    for (const auto& g : groups) n += g.members.size();
    return n;
  }

  friend bool operator==(const QuantizationPlan&, const QuantizationPlan&) = default;
};

struct PlanOptions {
  std::uint32_t k = 3;               // importance groups (non-uniform metrics)
  ImportanceMetric metric = ImportanceMetric::Fisher;
  std::uint32_t uniform_bits = 3;    // bit depth of the single uniform group
  CodebookKind codebook = CodebookKind::Affine;
  std::uint32_t float_width = 32;
};

namespace detail {

inline Codebook make_codebook(std::span<const double> params,
                              const std::vector<std::size_t>& members, std::uint32_t bits,
                              CodebookKind kind) {
  Vector v;
  v.reserve(members.size());
  for (std::size_t i : members) v.push_back(params[i]);
  const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
  if (kind == CodebookKind::Affine) return Codebook::affine(*mn, *mx, bits);
  const std::size_t levels = bits >= 20 ? v.size() : std::min<std::size_t>(v.size(), std::size_t{1} << bits);
  const KMeansResult km = kmeans_1d(v, levels, 50);
  return Codebook::from_table(km.centroids, bits);
}

}  // namespace detail

/// Groups surviving in-scope parameters by importance and gives group g
/// (ascending centroid) a g+1 bit codebook over its members' values.
///
/// Fisher importance reads `importance`; magnitude importance uses |params|.
/// When there are fewer distinct importance values than k, the plan holds
/// fewer groups and `requested_groups` keeps the original k.
inline QuantizationPlan build_plan(std::span<const double> params,
                                   std::span<const double> importance, const PruneMask& mask,
                                   const PlanOptions& opt) {
  check_same_length(mask.size(), params.size(), "build_plan (mask)");
  if (opt.metric == ImportanceMetric::Fisher)
    check_same_length(importance.size(), params.size(), "build_plan (importance)");
  const std::vector<std::size_t> survivors = mask.survivors();
  if (survivors.empty()) throw Error("build_plan", "no surviving parameters");

  QuantizationPlan plan;
  plan.metric = opt.metric;
  plan.float_width = opt.float_width;

  if (opt.metric == ImportanceMetric::Uniform) {
    plan.requested_groups = 1;
    ImportanceGroup g{survivors, 0.0, opt.uniform_bits, {}};
    g.codebook = detail::make_codebook(params, g.members, g.bits, opt.codebook);
    plan.groups.push_back(std::move(g));
    return plan;
  }
  if (opt.k < 1 || opt.k > 32) throw Error("build_plan", "k must be in [1, 32]");
  plan.requested_groups = opt.k;

  Vector score(survivors.size());
  for (std::size_t j = 0; j < survivors.size(); ++j) {
    const std::size_t i = survivors[j];
    score[j] = opt.metric == ImportanceMetric::Fisher ? importance[i] : std::abs(params[i]);
  }
  const KMeansResult km = kmeans_1d(score, opt.k);

  std::vector<ImportanceGroup> groups(km.centroids.size());
  Vector sums(groups.size(), 0.0);
  for (std::size_t j = 0; j < survivors.size(); ++j) {
    groups[km.assignments[j]].members.push_back(survivors[j]);
    sums[km.assignments[j]] += score[j];
  }
  for (std::size_t c = 0; c < groups.size(); ++c)
    if (!groups[c].members.empty())
      groups[c].centroid = sums[c] / static_cast<double>(groups[c].members.size());
  std::erase_if(groups, [](const ImportanceGroup& g) { return g.members.empty(); });
  std::stable_sort(groups.begin(), groups.end(),
                   [](const auto& a, const auto& b) { return a.centroid < b.centroid; });
  for (std::size_t c = 0; c < groups.size(); ++c) {
    groups[c].bits = static_cast<std::uint32_t>(c + 1);
    groups[c].codebook = detail::make_codebook(params, groups[c].members, groups[c].bits, opt.codebook);
  }
  plan.groups = std::move(groups);
  return plan;
}

/// Checks that the groups are disjoint, in range and, given a mask, cover
/// exactly its surviving in-scope indices.
inline void validate_coverage(const QuantizationPlan& plan, std::size_t param_count,
                              const PruneMask* mask) {
  std::vector<std::uint8_t> seen(param_count, 0);
  for (const auto& g : plan.groups)
    for (std::size_t i : g.members) {
      if (i >= param_count) throw Error("apply_plan", "member index out of range");
      if (seen[i]) throw Error("apply_plan", "index " + std::to_string(i) + " in two groups");
      seen[i] = 1;
    }
  if (!mask) return;
  check_same_length(mask->size(), param_count, "apply_plan (mask)");
  std::size_t expected = 0;
  for (std::size_t i : mask->scope) {
    if (!mask->keep[i]) continue;
    ++expected;
    if (!seen[i]) throw Error("apply_plan", "survivor " + std::to_string(i) + " not covered");
  }
  if (expected != plan.member_count())
    throw Error("apply_plan", "plan covers indices outside the surviving scope");
}

/// Replaces every covered parameter with its nearest level; everything else
/// is returned unchanged.
inline Vector apply_plan(std::span<const double> params, const QuantizationPlan& plan,
                         const PruneMask* mask = nullptr) {
  validate_coverage(plan, params.size(), mask);
  Vector out(params.begin(), params.end());
  for (const auto& g : plan.groups)
    for (std::size_t i : g.members) out[i] = g.codebook.quantize(params[i]);
  return out;
}

inline double average_bits(const QuantizationPlan& plan) {
  double bits = 0.0;
  std::size_t n = 0;
  for (const auto& g : plan.groups) {
    bits += static_cast<double>(g.members.size()) * g.bits;
    n += g.members.size();
  }
  if (n == 0) throw Error("average_bits", "empty plan");
  return bits / static_cast<double>(n);
}

// ---------------------------------------------------------------------------
// Compression accounting
// ---------------------------------------------------------------------------

enum class IndexOverhead { None, PerSurvivorU32 };

struct CompressionReport {
  std::size_t total_params = 0;
  std::size_t fc_params = 0;
  std::size_t removed = 0;
  std::size_t survivors = 0;
  double average_bits = 0.0;
  std::uint32_t float_width = 32;

  double pruning_ratio = 0.0;       // fc / (fc - removed)
  double quantization_ratio = 0.0;  // float_width / average_bits
  double total_ratio = 0.0;         // product of the two
  /// Product of the two ratios after rounding each to one decimal, the way
  /// the figures are usually quoted (18.9 x 13.3).
  double displayed_total_ratio = 0.0;
  /// Whole model, with non-prunable parameters kept at float_width.
  double whole_model_ratio = 0.0;

  bool has_index_overhead = false;
  double adjusted_total_ratio = 0.0;        // 32-bit index stored per survivor
  double adjusted_whole_model_ratio = 0.0;
};

inline double round_to(double x, int decimals) {
  const double s = std::pow(10.0, decimals);
  return std::round(x * s) / s;
}

inline CompressionReport compression_report(std::size_t total_params, std::size_t fc_params,
                                            std::size_t removed, double avg_bits,
                                            std::uint32_t float_width, IndexOverhead overhead) {
  if (fc_params == 0 || fc_params > total_params)
    throw Error("compression_report", "fc_params must be in [1, total_params]");
  if (removed > fc_params) throw Error("compression_report", "removed exceeds fc_params");
  if (removed == fc_params)
    throw Error("compression_report", "every parameter removed; no survivors to store");
  if (!(avg_bits > 0.0)) throw Error("compression_report", "average bits must be positive");

  CompressionReport r;
  r.total_params = total_params;
  r.fc_params = fc_params;
  r.removed = removed;
  r.survivors = fc_params - removed;
  r.average_bits = avg_bits;
  r.float_width = float_width;

  const double fc = static_cast<double>(fc_params);
  const double surv = static_cast<double>(r.survivors);
  const double rest = static_cast<double>(total_params - fc_params) * float_width;
  const double original_fc_bits = fc * float_width;
  const double compressed_fc_bits = surv * avg_bits;

  r.pruning_ratio = fc / surv;
  r.quantization_ratio = float_width / avg_bits;
  r.total_ratio = r.pruning_ratio * r.quantization_ratio;
  r.displayed_total_ratio = round_to(r.pruning_ratio, 1) * round_to(r.quantization_ratio, 1);
  r.whole_model_ratio = (original_fc_bits + rest) / (compressed_fc_bits + rest);

  if (overhead == IndexOverhead::PerSurvivorU32) {
    r.has_index_overhead = true;
    const double with_index = compressed_fc_bits + surv * 32.0;
    r.adjusted_total_ratio = original_fc_bits / with_index;
    r.adjusted_whole_model_ratio = (original_fc_bits + rest) / (with_index + rest);
  }
  return r;
}

}  // namespace fisherprune

#endif  // FISHERPRUNE_QUANTIZATION_HPP_
