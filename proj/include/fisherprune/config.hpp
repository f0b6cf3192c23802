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

#ifndef FISHERPRUNE_CONFIG_HPP_
#define FISHERPRUNE_CONFIG_HPP_

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fisherprune/common.hpp"
#include "fisherprune/fisher.hpp"
#include "fisherprune/network.hpp"
#include "fisherprune/pruning.hpp"
#include "fisherprune/quantization.hpp"

namespace fisherprune {

/// Shortest decimal text that parses back to the same double.
inline std::string fmt(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

enum class DatasetKind { Mnist, Blobs };

/// Everything one experiment needs. Loaded from `key = value` lines.
struct ExperimentConfig {
  // architecture
  std::string preset = "small_mlp";    // paper_cnn | small_mlp | custom
  std::string layers;                  // custom: e.g. "dense:2:16,relu,dense:16:2,softmax"
  std::string input_shape;             // custom: e.g. "2" or "1x28x28"

  // optimizer and schedule
  AdamHyper adam;
  std::size_t epochs = 10;
  std::size_t batch_size = 256;
  std::optional<std::uint64_t> seed;   // mandatory

  // data
  DatasetKind dataset = DatasetKind::Mnist;
  std::string train_images, train_labels, test_images, test_labels;
  std::size_t train_limit = 0;         // 0 = all
  std::size_t test_limit = 0;
  bool binarize = false;
  std::size_t blobs_per_class = 200;
  std::size_t blobs_test_per_class = 100;
  std::size_t blobs_classes = 2;
  std::size_t blobs_dim = 2;
  double blobs_separation = 10.0;

  // pruning sweep: counts from start to stop inclusive by step; or an explicit list
  std::vector<std::string> prune_methods = {"mag", "fisher", "mag_fisher"};
  double prune_r = 0.05;
  std::vector<std::int64_t> prune_counts;
  double prune_fraction_start = 0.0, prune_fraction_stop = 0.0, prune_fraction_step = 0.0;
  double prune_fine_start = 0.0, prune_fine_stop = 0.0, prune_fine_step = 0.0;

  // quantization sweep
  double quant_prune_fraction = 0.9133;   // magnitude pruning applied before quantizing
  std::uint32_t quant_k_min = 3, quant_k_max = 10;
  std::uint32_t uniform_bits_min = 1, uniform_bits_max = 8;
  CodebookKind codebook = CodebookKind::Affine;
  std::uint32_t float_width = 32;

  // report
  double max_loss = 0.01;           // accuracy points tolerated for pruning
  double quant_max_loss = 0.01;     // accuracy points tolerated for quantization
  std::string report_prune_method = "mag_fisher";
  std::string report_quant_method = "fisher_quant";

  std::string output_dir = ".";

  std::uint64_t require_seed() const {
    if (!seed) throw Error("config", "seed is mandatory");
    return *seed;
  }

  Network build_network(Rng& rng) const;
  void set(const std::string& key, const std::string& value);
  void validate() const;
};

namespace detail {

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const char* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end) throw Error(key, "cannot parse '" + v + "'");
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error(key, "expected a boolean, got '" + v + "'");
}

inline Shape parse_shape(const std::string& s) {
  Shape out;
  for (const auto& part : split(s, 'x')) out.push_back(parse_number<std::size_t>("input_shape", part));
  if (out.empty()) throw Error("input_shape", "empty shape");
  return out;
}

inline std::vector<Layer> parse_layers(const std::string& s) {
  std::vector<Layer> out;
  for (const auto& item : split(s, ',')) {
    const auto f = split(item, ':');
    const std::string& kind = f.at(0);
    auto arg = [&](std::size_t i) {
      if (i >= f.size()) throw Error("layers", "missing argument in '" + item + "'");
      return f[i];
    };
    if (kind == "dense")
      out.push_back(Layer::dense(parse_number<std::size_t>("layers", arg(1)),
                                 parse_number<std::size_t>("layers", arg(2))));
    else if (kind == "conv2d")
      out.push_back(Layer::conv2d(parse_number<std::size_t>("layers", arg(1)),
                                  parse_number<std::size_t>("layers", arg(2))));
    else if (kind == "maxpool") out.push_back(Layer::max_pool());
    else if (kind == "relu") out.push_back(Layer::relu());
    else if (kind == "softmax") out.push_back(Layer::softmax());
    else if (kind == "dropout") out.push_back(Layer::dropout(parse_number<double>("layers", arg(1))));
    else throw Error("layers", "unknown layer '" + kind + "'");
  }
  return out;
}

}  // namespace detail

inline Network ExperimentConfig::build_network(Rng& rng) const {
  if (preset == "paper_cnn") return Network(paper_cnn_input(), paper_cnn_layers(), rng);
  if (preset == "small_mlp") return Network(small_mlp_input(), small_mlp_layers(), rng);
  if (preset == "custom")
    return Network(detail::parse_shape(input_shape), detail::parse_layers(layers), rng);
  throw Error("preset", "unknown preset '" + preset + "'");
}

inline void ExperimentConfig::set(const std::string& key, const std::string& v) {
  using detail::parse_number;
  auto num = [&]<typename T>(T& dst) { dst = parse_number<T>(key, v); };
  if (key == "preset") preset = v;
  else if (key == "layers") layers = v;
  else if (key == "input_shape") input_shape = v;
  else if (key == "alpha") num(adam.alpha);
  else if (key == "beta1") num(adam.beta1);
  else if (key == "beta2") num(adam.beta2);
  else if (key == "epsilon") num(adam.epsilon);
  else if (key == "update_rule") adam.update_rule = parse_update_rule(v);
  else if (key == "epochs") num(epochs);
  else if (key == "batch_size") num(batch_size);
  else if (key == "seed") seed = parse_number<std::uint64_t>(key, v);
  else if (key == "dataset") {
    if (v == "mnist") dataset = DatasetKind::Mnist;
    else if (v == "blobs") dataset = DatasetKind::Blobs;
    else throw Error(key, "unknown dataset '" + v + "'");
  }
  else if (key == "train_images") train_images = v;
  else if (key == "train_labels") train_labels = v;
  else if (key == "test_images") test_images = v;
  else if (key == "test_labels") test_labels = v;
  else if (key == "train_limit") num(train_limit);
  else if (key == "test_limit") num(test_limit);
  else if (key == "binarize") binarize = detail::parse_bool(key, v);
  else if (key == "blobs_per_class") num(blobs_per_class);
  else if (key == "blobs_test_per_class") num(blobs_test_per_class);
  else if (key == "blobs_classes") num(blobs_classes);
  else if (key == "blobs_dim") num(blobs_dim);
  else if (key == "blobs_separation") num(blobs_separation);
  else if (key == "prune_methods") {
    prune_methods = split(v, ',');
    for (const auto& m : prune_methods) parse_prune_method(m);
  }
  else if (key == "prune_r") num(prune_r);
  else if (key == "prune_counts") {
    prune_counts.clear();
    for (const auto& c : split(v, ',')) prune_counts.push_back(parse_number<std::int64_t>(key, c));
  }
  else if (key == "prune_fraction_start") num(prune_fraction_start);
  else if (key == "prune_fraction_stop") num(prune_fraction_stop);
  else if (key == "prune_fraction_step") num(prune_fraction_step);
  else if (key == "prune_fine_start") num(prune_fine_start);
  else if (key == "prune_fine_stop") num(prune_fine_stop);
  else if (key == "prune_fine_step") num(prune_fine_step);
  else if (key == "quant_prune_fraction") num(quant_prune_fraction);
  else if (key == "quant_k_min") num(quant_k_min);
  else if (key == "quant_k_max") num(quant_k_max);
  else if (key == "uniform_bits_min") num(uniform_bits_min);
  else if (key == "uniform_bits_max") num(uniform_bits_max);
  else if (key == "codebook") codebook = parse_codebook(v);
  else if (key == "float_width") num(float_width);
  else if (key == "max_loss") num(max_loss);
  else if (key == "quant_max_loss") num(quant_max_loss);
  else if (key == "report_prune_method") { parse_prune_method(v); report_prune_method = v; }
  else if (key == "report_quant_method") report_quant_method = v;
  else if (key == "output_dir") output_dir = v;
  else throw Error(key, "unknown config key");
}

inline void ExperimentConfig::validate() const {
  require_seed();
  adam.validate();
  if (batch_size == 0) throw Error("batch_size", "must be >= 1");
  if (!(prune_r >= 0.0 && prune_r <= 1.0)) throw Error("prune_r", "must be in [0, 1]");
  if (quant_k_min < 1 || quant_k_max > 32 || quant_k_min > quant_k_max)
    throw Error("quant_k_min", "k range must satisfy 1 <= min <= max <= 32");
  if (uniform_bits_min < 1 || uniform_bits_max > 32 || uniform_bits_min > uniform_bits_max)
    throw Error("uniform_bits_min", "bit range must satisfy 1 <= min <= max <= 32");
  if (!(quant_prune_fraction >= 0.0 && quant_prune_fraction < 1.0))
    throw Error("quant_prune_fraction", "must be in [0, 1)");
  if (max_loss < 0.0 || quant_max_loss < 0.0) throw Error("max_loss", "must be >= 0");
  if (report_quant_method != "fisher_quant" && report_quant_method != "mag_quant" &&
      report_quant_method != "uniform")
    throw Error("report_quant_method", "unknown method '" + report_quant_method + "'");
  if (dataset == DatasetKind::Mnist && (train_images.empty() || train_labels.empty() ||
                                        test_images.empty() || test_labels.empty()))
    throw Error("dataset", "mnist needs train_images, train_labels, test_images, test_labels");
}

/// Parses `key = value` lines; `#` starts a comment. Later keys win.
inline ExperimentConfig parse_config(std::istream& in, ExperimentConfig cfg = {}) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error("config line " + std::to_string(lineno), "expected key = value");
    cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

/// Relative data paths and output_dir resolve against the config file's
/// directory.
inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(path, "cannot open config");
  ExperimentConfig cfg = parse_config(f);
  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  for (std::string* p : {&cfg.train_images, &cfg.train_labels, &cfg.test_images,
                         &cfg.test_labels, &cfg.output_dir})
    if (!p->empty() && std::filesystem::path(*p).is_relative()) *p = (base / *p).string();
  return cfg;
}

inline ExperimentConfig parse_config_string(const std::string& text) {
  std::istringstream is(text);
  return parse_config(is);
}

}  // namespace fisherprune

#endif  // FISHERPRUNE_CONFIG_HPP_
