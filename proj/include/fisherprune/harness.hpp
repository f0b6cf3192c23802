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

#ifndef FISHERPRUNE_HARNESS_HPP_
#define FISHERPRUNE_HARNESS_HPP_

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fisherprune/common.hpp"
#include "fisherprune/config.hpp"
#include "fisherprune/data.hpp"
#include "fisherprune/fisher.hpp"
#include "fisherprune/network.hpp"
#include "fisherprune/pruning.hpp"
#include "fisherprune/quantization.hpp"
#include "fisherprune/serialize.hpp"

namespace fisherprune {

// ---------------------------------------------------------------------------
// Data
// ---------------------------------------------------------------------------

struct DataSplits {
  Dataset train;
  Dataset test;
};

inline DataSplits load_data(const ExperimentConfig& cfg) {
  DataSplits d;
  if (cfg.dataset == DatasetKind::Blobs) {
    const std::uint64_t seed = cfg.require_seed();
    d.train = synthetic_blobs(seed, cfg.blobs_per_class, cfg.blobs_classes, cfg.blobs_dim,
                              cfg.blobs_separation);
    d.test = synthetic_blobs(seed, cfg.blobs_test_per_class, cfg.blobs_classes, cfg.blobs_dim,
                             cfg.blobs_separation, Split::Test);
  } else {
    IdxOptions opt{cfg.binarize};
    d.train = load_idx(cfg.train_images, cfg.train_labels, Split::Train, opt);
    d.test = load_idx(cfg.test_images, cfg.test_labels, Split::Test, opt);
  }
  if (cfg.train_limit) d.train = d.train.head(cfg.train_limit);
  if (cfg.test_limit) d.test = d.test.head(cfg.test_limit);
  return d;
}

inline EvalResult evaluate(const Network& net, const Dataset& ds) {
  return evaluate(net, ds.images, ds.labels);
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct MetricsRecord {
  std::size_t epoch = 0;
  std::uint64_t step = 0;
  double train_loss = 0.0;     // mean cross-entropy per training example
  double test_accuracy = 0.0;
  double test_score = 0.0;     // mean cross-entropy per test example
  double wall_seconds = 0.0;   // not part of the deterministic CSV
};

struct TrainResult {
  Network net;
  AdamState state;
  std::optional<FisherEstimate> fisher;  // absent when no step was taken
  std::vector<MetricsRecord> history;    // epoch 0 = initialization
};

using EpochCallback = std::function<void(const MetricsRecord&)>;

/// Adam training. Returns the final parameters together with the Fisher
/// estimate of the last step.
inline TrainResult train(const ExperimentConfig& cfg, const Dataset& train_set,
                         const Dataset& test_set, const EpochCallback& on_epoch = {}) {
  const std::uint64_t seed = cfg.require_seed();
  cfg.adam.validate();
  Rng init(seed);
  TrainResult r{cfg.build_network(init), {}, {}, {}};
  r.state = AdamState::zeros(r.net.param_count());
  const auto t0 = std::chrono::steady_clock::now();
  auto seconds = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  const EvalResult e0 = evaluate(r.net, test_set);
  r.history.push_back({0, 0, 0.0, e0.accuracy, e0.test_score, seconds()});
  if (on_epoch) on_epoch(r.history.back());

  BatchStream stream(train_set, cfg.batch_size, seed);
  Rng dropout(seed ^ 0xD1B54A32D192ED03ULL);
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    double total = 0.0;
    for (const auto& idx : stream.epoch(epoch)) {
      const Batch b = stream.batch(idx);
      const Gradient g = backward(r.net, b, &dropout);
      total += g.loss;
      adam_step_inplace(r.state, r.net.params(), g.grad, cfg.adam);
    }
    const EvalResult e = evaluate(r.net, test_set);
    r.history.push_back({epoch, r.state.t, total / static_cast<double>(train_set.size()),
                         e.accuracy, e.test_score, seconds()});
    if (on_epoch) on_epoch(r.history.back());
  }
  if (r.state.t > 0) r.fisher = fisher_from_state(r.state, cfg.adam);
  return r;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

inline constexpr const char* kMetricsHeader = "epoch,step,train_loss,test_accuracy,test_score";
inline constexpr const char* kPruneHeader = "L,fraction_removed,accuracy,test_score,method,r";
inline constexpr const char* kQuantHeader = "method,k,average_bits,accuracy,test_score";

inline std::string metrics_csv(const std::vector<MetricsRecord>& rows) {
  std::ostringstream os;
  os << kMetricsHeader << '\n';
  for (const auto& m : rows)
    os << m.epoch << ',' << m.step << ',' << fmt(m.train_loss) << ',' << fmt(m.test_accuracy)
       << ',' << fmt(m.test_score) << '\n';
  return os.str();
}

inline std::string prune_csv(const std::vector<PruneSweepRow>& rows) {
  std::ostringstream os;
  os << kPruneHeader << '\n';
  for (const auto& r : rows)
    os << r.count << ',' << fmt(r.fraction_removed) << ',' << fmt(r.accuracy) << ','
       << fmt(r.test_score) << ',' << to_string(r.method) << ',' << fmt(r.r) << '\n';
  return os.str();
}

struct QuantSweepRow {
  std::string method;        // fisher_quant | mag_quant | uniform | original
  std::uint32_t k = 0;       // groups; 1 for uniform, 0 for the unquantized row
  double average_bits = 0.0;
  double accuracy = 0.0;
  double test_score = 0.0;
};

inline std::string quant_csv(const std::vector<QuantSweepRow>& rows) {
  std::ostringstream os;
  os << kQuantHeader << '\n';
  for (const auto& r : rows)
    os << r.method << ',' << r.k << ',' << fmt(r.average_bits) << ',' << fmt(r.accuracy) << ','
       << fmt(r.test_score) << '\n';
  return os.str();
}

namespace detail {

inline std::vector<std::vector<std::string>> read_csv(const std::string& path,
                                                      const std::string& header) {
  std::ifstream f(path);
  if (!f) throw Error(path, "cannot open");
  std::string line;
  if (!std::getline(f, line) || trim(line) != header)
    throw Error(path, "expected header '" + header + "'");
  const std::size_t cols = split(header, ',').size();
  std::vector<std::vector<std::string>> rows;
  std::size_t lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto cells = split(line, ',');
    if (cells.size() != cols)
      throw Error(path + ":" + std::to_string(lineno), "expected " + std::to_string(cols) + " columns");
    rows.push_back(std::move(cells));
  }
  return rows;
}

}  // namespace detail

inline std::vector<PruneSweepRow> read_prune_csv(const std::string& path) {
  std::vector<PruneSweepRow> out;
  for (const auto& c : detail::read_csv(path, kPruneHeader)) {
    PruneSweepRow r;
    r.count = detail::parse_number<std::int64_t>(path, c[0]);
    r.fraction_removed = detail::parse_number<double>(path, c[1]);
    r.accuracy = detail::parse_number<double>(path, c[2]);
    r.test_score = detail::parse_number<double>(path, c[3]);
    r.method = parse_prune_method(c[4]);
    r.r = detail::parse_number<double>(path, c[5]);
    out.push_back(r);
  }
  return out;
}

inline std::vector<QuantSweepRow> read_quant_csv(const std::string& path) {
  std::vector<QuantSweepRow> out;
  for (const auto& c : detail::read_csv(path, kQuantHeader))
    out.push_back({c[0], detail::parse_number<std::uint32_t>(path, c[1]),
                   detail::parse_number<double>(path, c[2]),
                   detail::parse_number<double>(path, c[3]),
                   detail::parse_number<double>(path, c[4])});
  return out;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(path.string(), "cannot open for writing");
  f << text;
  if (!f) throw Error(path.string(), "write failed");
}

// ---------------------------------------------------------------------------
// Pruning sweeps
// ---------------------------------------------------------------------------

/// Ascending removal counts, always starting with 0 (the unpruned baseline).
inline std::vector<std::int64_t> counts_from_fractions(double start, double stop, double step,
                                                       std::size_t scope) {
  std::vector<std::int64_t> out{0};
  if (step <= 0.0) return out;
  for (std::size_t i = 0;; ++i) {
    const double f = start + static_cast<double>(i) * step;
    if (f > stop + 1e-12 || f > 1.0 + 1e-12) break;
    const auto c = static_cast<std::int64_t>(std::llround(f * static_cast<double>(scope)));
    if (c > out.back()) out.push_back(std::min<std::int64_t>(c, static_cast<std::int64_t>(scope)));
  }
  return out;
}

inline std::vector<std::int64_t> coarse_schedule(const ExperimentConfig& cfg, std::size_t scope) {
  if (!cfg.prune_counts.empty()) {
    std::vector<std::int64_t> out = cfg.prune_counts;
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    if (out.front() != 0) out.insert(out.begin(), 0);
    for (auto c : out)
      if (c < 0 || static_cast<std::size_t>(c) > scope)
        throw Error("prune_counts", "count " + std::to_string(c) + " outside [0, " +
                                        std::to_string(scope) + "]");
    return out;
  }
  if (cfg.prune_fraction_step > 0.0)
    return counts_from_fractions(cfg.prune_fraction_start, cfg.prune_fraction_stop,
                                 cfg.prune_fraction_step, scope);
  return counts_from_fractions(0.05, 1.0, 0.05, scope);
}

inline std::vector<std::int64_t> fine_schedule(const ExperimentConfig& cfg, std::size_t scope) {
  if (cfg.prune_fine_step <= 0.0) return {};
  return counts_from_fractions(cfg.prune_fine_start, cfg.prune_fine_stop, cfg.prune_fine_step,
                               scope);
}

inline bool needs_fisher(PruneMethod m) { return m != PruneMethod::Magnitude; }

/// One sweep per configured method, keyed by method name.
inline std::map<std::string, std::vector<PruneSweepRow>> run_prune_sweeps(
    const ExperimentConfig& cfg, const Network& net, const std::optional<FisherEstimate>& fisher,
    const Dataset& eval, const std::vector<std::int64_t>& counts) {
  Network base = net;
  base.clear_mask();
  const FisherEstimate zeros{Vector(base.param_count(), 0.0)};
  std::map<std::string, std::vector<PruneSweepRow>> out;
  for (const auto& name : cfg.prune_methods) {
    const PruneMethod m = parse_prune_method(name);
    if (needs_fisher(m) && !fisher)
      throw Error("prune-sweep", "method '" + name + "' needs the model's Fisher section");
    out[name] = sweep_prune(base, fisher ? *fisher : zeros, counts, method_ratio(m, cfg.prune_r),
                            eval.images, eval.labels);
  }
  return out;
}

/// Re-derives `n` randomly chosen rows from scratch and reports whether each
/// stored accuracy and score is reproduced exactly.
inline bool spot_check_prune_rows(const Network& net, const FisherEstimate& fisher,
                                  const std::vector<PruneSweepRow>& rows, const Dataset& eval,
                                  std::size_t n, std::uint64_t seed) {
  if (rows.empty()) return true;
  Rng rng(seed);
  Network base = net;
  base.clear_mask();
  for (std::size_t i = 0; i < n; ++i) {
    const PruneSweepRow& row = rows[rng.below(rows.size())];
    Network w = base;
    w.set_mask(prune(base.params(), fisher, {row.count, row.r}, base.fc_scope()));
    const EvalResult e = evaluate(w, eval);
    if (e.accuracy != row.accuracy || e.test_score != row.test_score) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Quantization sweeps
// ---------------------------------------------------------------------------

/// Model as quantized: its own mask, or magnitude pruning at
/// `quant_prune_fraction` of the dense parameters if it has none.
inline Network pruned_for_quantization(const ExperimentConfig& cfg, const Network& net) {
  Network out = net;
  if (out.mask()) return out;
  const auto& scope = out.fc_scope();
  const auto count = static_cast<std::int64_t>(
      std::llround(cfg.quant_prune_fraction * static_cast<double>(scope.size())));
  const FisherEstimate unused{Vector(out.param_count(), 0.0)};
  out.set_mask(prune(out.params(), unused, {count, 0.0}, scope));
  return out;
}

inline ImportanceMetric parse_quant_metric(const std::string& s) {
  if (s == "fisher_quant") return ImportanceMetric::Fisher;
  if (s == "mag_quant") return ImportanceMetric::Magnitude;
  if (s == "uniform") return ImportanceMetric::Uniform;
  throw Error("quant metric", "unknown metric '" + s + "'");
}

/// Quantizes a pruned network under `opt` and returns the quantized copy.
inline Network quantized_network(const Network& pruned, const FisherEstimate* fisher,
                                 const PlanOptions& opt, QuantizationPlan* plan_out = nullptr) {
  if (!pruned.mask()) throw Error("quantize", "network has no prune mask");
  if (opt.metric == ImportanceMetric::Fisher && !fisher)
    throw Error("quantize", "fisher_quant needs the model's Fisher section");
  const Vector eff = pruned.effective_params();
  const std::span<const double> imp =
      fisher ? std::span<const double>(fisher->values) : std::span<const double>();
  QuantizationPlan plan = build_plan(eff, imp, *pruned.mask(), opt);
  Network q = pruned;
  q.params() = apply_plan(eff, plan, &*pruned.mask());
  if (plan_out) *plan_out = std::move(plan);
  return q;
}

/// Rows: the unquantized pruned model, then fisher_quant and mag_quant for
/// every k, then uniform for every bit depth.
inline std::vector<QuantSweepRow> run_quant_sweep(const ExperimentConfig& cfg,
                                                  const Network& pruned,
                                                  const std::optional<FisherEstimate>& fisher,
                                                  const Dataset& eval) {
  std::vector<QuantSweepRow> rows;
  const EvalResult base = evaluate(pruned, eval);
  rows.push_back({"original", 0, static_cast<double>(cfg.float_width), base.accuracy,
                  base.test_score});
  for (ImportanceMetric metric : {ImportanceMetric::Fisher, ImportanceMetric::Magnitude}) {
    if (metric == ImportanceMetric::Fisher && !fisher) continue;
    for (std::uint32_t k = cfg.quant_k_min; k <= cfg.quant_k_max; ++k) {
      QuantizationPlan plan;
      const PlanOptions opt{k, metric, 0, cfg.codebook, cfg.float_width};
      const Network q = quantized_network(pruned, fisher ? &*fisher : nullptr, opt, &plan);
      const EvalResult e = evaluate(q, eval);
      rows.push_back({to_string(metric), k, average_bits(plan), e.accuracy, e.test_score});
    }
  }
  for (std::uint32_t b = cfg.uniform_bits_min; b <= cfg.uniform_bits_max; ++b) {
    QuantizationPlan plan;
    const PlanOptions opt{1, ImportanceMetric::Uniform, b, cfg.codebook, cfg.float_width};
    const Network q = quantized_network(pruned, nullptr, opt, &plan);
    const EvalResult e = evaluate(q, eval);
    rows.push_back({"uniform", 1, average_bits(plan), e.accuracy, e.test_score});
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

struct OperatingPoints {
  std::optional<PruneSweepRow> prune;   // largest removal within max_loss
  double prune_baseline = 0.0;
  std::optional<QuantSweepRow> quant;   // fewest average bits within quant_max_loss
  double quant_baseline = 0.0;
  std::optional<CompressionReport> plain;
  std::optional<CompressionReport> with_index;
};

inline constexpr double kThresholdSlack = 1e-12;

/// Picks operating points exactly from the sweep rows (no interpolation) and
/// runs the compression arithmetic on them.
inline OperatingPoints choose_operating_points(const ExperimentConfig& cfg,
                                               const std::vector<PruneSweepRow>& prune_rows,
                                               const std::vector<QuantSweepRow>& quant_rows,
                                               std::size_t total_params, std::size_t fc_params) {
  OperatingPoints op;
  const PruneMethod pm = parse_prune_method(cfg.report_prune_method);
  const PruneSweepRow* base = nullptr;
  for (const auto& r : prune_rows)
    if (r.method == pm && r.count == 0) base = &r;
  if (base) {
    op.prune_baseline = base->accuracy;
    for (const auto& r : prune_rows) {
      if (r.method != pm || static_cast<std::size_t>(r.count) >= fc_params) continue;
      if (r.accuracy + kThresholdSlack < base->accuracy - cfg.max_loss) continue;
      if (!op.prune || r.fraction_removed > op.prune->fraction_removed) op.prune = r;
    }
  }
  const QuantSweepRow* original = nullptr;
  for (const auto& r : quant_rows)
    if (r.method == "original") original = &r;
  if (original) {
    op.quant_baseline = original->accuracy;
    for (const auto& r : quant_rows) {
      if (r.method != cfg.report_quant_method && r.method != "original") continue;
      if (r.accuracy + kThresholdSlack < original->accuracy - cfg.quant_max_loss) continue;
      if (!op.quant || r.average_bits < op.quant->average_bits) op.quant = r;
    }
  }
  if (op.prune && op.quant) {
    const auto removed = static_cast<std::size_t>(op.prune->count);
    op.plain = compression_report(total_params, fc_params, removed, op.quant->average_bits,
                                  cfg.float_width, IndexOverhead::None);
    op.with_index = compression_report(total_params, fc_params, removed, op.quant->average_bits,
                                       cfg.float_width, IndexOverhead::PerSurvivorU32);
  }
  return op;
}

inline constexpr const char* kReportHeader =
    "prune_method,removed,fraction_removed,prune_accuracy,quant_method,average_bits,"
    "quant_accuracy,pruning_ratio,quantization_ratio,total_ratio,displayed_total_ratio,"
    "adjusted_total_ratio,whole_model_ratio,adjusted_whole_model_ratio";

inline std::string report_csv(const ExperimentConfig& cfg, const OperatingPoints& op) {
  std::ostringstream os;
  os << kReportHeader << '\n';
  if (!op.plain) {
    os << "no feasible point\n";
    return os.str();
  }
  const auto& p = *op.plain;
  os << cfg.report_prune_method << ',' << op.prune->count << ',' << fmt(op.prune->fraction_removed)
     << ',' << fmt(op.prune->accuracy) << ',' << op.quant->method << ','
     << fmt(op.quant->average_bits) << ',' << fmt(op.quant->accuracy) << ','
     << fmt(p.pruning_ratio) << ',' << fmt(p.quantization_ratio) << ',' << fmt(p.total_ratio)
     << ',' << fmt(p.displayed_total_ratio) << ',' << fmt(op.with_index->adjusted_total_ratio)
     << ',' << fmt(p.whole_model_ratio) << ',' << fmt(op.with_index->adjusted_whole_model_ratio)
     << '\n';
  return os.str();
}

inline std::string report_text(const ExperimentConfig& cfg, const OperatingPoints& op) {
  std::ostringstream os;
  char buf[256];
  if (!op.prune) {
    os << "pruning: no feasible point (method " << cfg.report_prune_method
       << ", needs a baseline row with L = 0)\n";
  } else {
    std::snprintf(buf, sizeof buf,
                  "pruning (%s): remove %lld parameters (%.2f%%), accuracy %.2f%% "
                  "(baseline %.2f%%, tolerance %.2f points)\n",
                  cfg.report_prune_method.c_str(), static_cast<long long>(op.prune->count),
                  100.0 * op.prune->fraction_removed, 100.0 * op.prune->accuracy,
                  100.0 * op.prune_baseline, 100.0 * cfg.max_loss);
    os << buf;
  }
  if (!op.quant) {
    os << "quantization: no feasible point (needs the 'original' row)\n";
  } else {
    std::snprintf(buf, sizeof buf,
                  "quantization (%s): %.4g average bits, accuracy %.2f%% "
                  "(unquantized %.2f%%, tolerance %.2f points)\n",
                  op.quant->method.c_str(), op.quant->average_bits, 100.0 * op.quant->accuracy,
                  100.0 * op.quant_baseline, 100.0 * cfg.quant_max_loss);
    os << buf;
  }
  if (op.plain) {
    const auto& p = *op.plain;
    std::snprintf(buf, sizeof buf,
                  "compression: pruning %.1fx, quantization %u/%.4g = %.1fx, total %.1fx "
                  "(%.1f x %.1f = %.1f)\n",
                  p.pruning_ratio, p.float_width, p.average_bits, p.quantization_ratio,
                  p.total_ratio, round_to(p.pruning_ratio, 1), round_to(p.quantization_ratio, 1),
                  p.displayed_total_ratio);
    os << buf;
    std::snprintf(buf, sizeof buf,
                  "with a 32-bit index per surviving parameter: total %.1fx\n"
                  "whole model (non-dense layers kept at %u bits): %.1fx, %.1fx with indices\n",
                  op.with_index->adjusted_total_ratio, p.float_width, p.whole_model_ratio,
                  op.with_index->adjusted_whole_model_ratio);
    os << buf;
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// File-level commands (shared by the CLI and the integration tests)
// ---------------------------------------------------------------------------

namespace fs = std::filesystem;

struct TrainOutputs {
  fs::path model;
  fs::path metrics;
  TrainResult result;
};

/// Writes model.fprn (with Fisher section), metrics.csv and timing.csv.
inline TrainOutputs cmd_train(const ExperimentConfig& cfg, const EpochCallback& on_epoch = {}) {
  cfg.validate();
  const DataSplits data = load_data(cfg);
  TrainOutputs out;
  out.result = train(cfg, data.train, data.test, on_epoch);
  const fs::path dir(cfg.output_dir);
  fs::create_directories(dir);
  out.model = dir / "model.fprn";
  out.metrics = dir / "metrics.csv";
  save_model(out.model.string(), out.result.net,
             out.result.fisher ? &*out.result.fisher : nullptr);
  write_text(out.metrics, metrics_csv(out.result.history));
  std::ostringstream timing;
  timing << "epoch,wall_seconds\n";
  for (const auto& m : out.result.history) timing << m.epoch << ',' << fmt(m.wall_seconds) << '\n';
  write_text(dir / "timing.csv", timing.str());
  return out;
}

inline std::string sweep_meta(const ExperimentConfig& cfg, const Dataset& eval, std::size_t scope) {
  std::ostringstream os;
  os << "test_score = cross-entropy summed over the evaluation set / evaluation set size\n"
     << "accuracy = top-1 argmax match rate\n"
     << "eval_examples = " << eval.size() << "\n"
     << "scope = dense-layer weights and biases (" << scope << " parameters)\n"
     << "seed = " << cfg.require_seed() << "\n";
  return os.str();
}

/// One CSV per method (prune_<method>.csv) plus prune_<method>_fine.csv when
/// a fine schedule is configured. Returns the written paths.
inline std::vector<fs::path> cmd_prune_sweep(const ExperimentConfig& cfg,
                                             const std::string& model_path) {
  cfg.validate();
  const ModelFile mf = load_model(model_path);
  const DataSplits data = load_data(cfg);
  const std::size_t scope = mf.net.fc_scope().size();
  const fs::path dir(cfg.output_dir);
  std::vector<fs::path> written;
  auto emit = [&](const std::vector<std::int64_t>& counts, const std::string& suffix) {
    for (const auto& [name, rows] : run_prune_sweeps(cfg, mf.net, mf.fisher, data.test, counts)) {
      const fs::path p = dir / ("prune_" + name + suffix + ".csv");
      write_text(p, prune_csv(rows));
      written.push_back(p);
    }
  };
  emit(coarse_schedule(cfg, scope), "");
  if (const auto fine = fine_schedule(cfg, scope); !fine.empty()) emit(fine, "_fine");
  write_text(dir / "prune_sweep.meta", sweep_meta(cfg, data.test, scope));
  return written;
}

/// Writes a pruned copy of the model (mask section installed).
inline fs::path cmd_prune(const ExperimentConfig& cfg, const std::string& model_path,
                          const std::string& method, std::int64_t count,
                          const std::string& out_path) {
  const ModelFile mf = load_model(model_path);
  const PruneMethod m = parse_prune_method(method);
  if (needs_fisher(m) && !mf.fisher)
    throw Error("prune", "method '" + method + "' needs the model's Fisher section");
  Network net = mf.net;
  net.clear_mask();
  const FisherEstimate zeros{Vector(net.param_count(), 0.0)};
  net.set_mask(prune(net.params(), mf.fisher ? *mf.fisher : zeros,
                     {count, method_ratio(m, cfg.prune_r)}, net.fc_scope()));
  save_model(out_path, net, mf.fisher ? &*mf.fisher : nullptr);
  return out_path;
}

inline fs::path cmd_quant_sweep(const ExperimentConfig& cfg, const std::string& model_path) {
  cfg.validate();
  const ModelFile mf = load_model(model_path);
  const DataSplits data = load_data(cfg);
  const Network pruned = pruned_for_quantization(cfg, mf.net);
  const fs::path p = fs::path(cfg.output_dir) / "quant.csv";
  write_text(p, quant_csv(run_quant_sweep(cfg, pruned, mf.fisher, data.test)));
  return p;
}

/// Writes a quantized-model file: pruned parameters replaced by their
/// levels, with the mask and quantization sections.
inline fs::path cmd_quantize(const ExperimentConfig& cfg, const std::string& model_path,
                             const PlanOptions& opt, const std::string& out_path) {
  const ModelFile mf = load_model(model_path);
  const Network pruned = pruned_for_quantization(cfg, mf.net);
  QuantizationPlan plan;
  Network q = quantized_network(pruned, mf.fisher ? &*mf.fisher : nullptr, opt, &plan);
  const QuantizedSection section = encode_plan(q.params(), plan);
  save_model(out_path, q, mf.fisher ? &*mf.fisher : nullptr, &section);
  return out_path;
}

struct ReportOutputs {
  OperatingPoints points;
  std::string text;
};

inline ReportOutputs cmd_report(const ExperimentConfig& cfg,
                                const std::vector<std::string>& prune_csvs,
                                const std::string& quant_csv_path, const std::string& model_path) {
  const ModelFile mf = load_model(model_path);
  std::vector<PruneSweepRow> prune_rows;
  for (const auto& p : prune_csvs) {
    auto rows = read_prune_csv(p);
    prune_rows.insert(prune_rows.end(), rows.begin(), rows.end());
  }
  const auto quant_rows = read_quant_csv(quant_csv_path);
  ReportOutputs out;
  out.points = choose_operating_points(cfg, prune_rows, quant_rows, mf.net.param_count(),
                                       mf.net.fc_scope().size());
  out.text = report_text(cfg, out.points);
  const fs::path dir(cfg.output_dir);
  write_text(dir / "report.csv", report_csv(cfg, out.points));
  write_text(dir / "report.txt", out.text);
  return out;
}

inline MetricsRecord cmd_eval(const ExperimentConfig& cfg, const std::string& model_path) {
  const ModelFile mf = load_model(model_path);
  const DataSplits data = load_data(cfg);
  const EvalResult e = evaluate(mf.net, data.test);
  return MetricsRecord{0, 0, 0.0, e.accuracy, e.test_score, 0.0};
}

}  // namespace fisherprune

#endif  // FISHERPRUNE_HARNESS_HPP_
