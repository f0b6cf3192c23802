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

// fisherprune: train, prune, quantize and report on small classifiers.
//
// Every subcommand reads a key = value config (--config) that may be
// amended with repeated --set key=value. On failure the tool prints one JSON
// line {"error": ..., "where": ...} to stderr and exits with status 1.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "fisherprune.hpp"

namespace fp = fisherprune;

namespace {

struct Common {
  std::string config;
  std::vector<std::string> overrides;
  std::string output_dir;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config, "experiment config file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--set", c.overrides, "override a config key (key=value)");
  cmd->add_option("-o,--output-dir", c.output_dir, "output directory (overrides output_dir)");
}

fp::ExperimentConfig resolve(const Common& c) {
  fp::ExperimentConfig cfg = fp::load_config(c.config);
  for (const auto& kv : c.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw fp::Error("--set", "expected key=value, got '" + kv + "'");
    cfg.set(fp::trim(kv.substr(0, eq)), fp::trim(kv.substr(eq + 1)));
  }
  if (!c.output_dir.empty()) cfg.output_dir = c.output_dir;
  return cfg;
}

void print_metrics(const fp::MetricsRecord& m) {
  std::printf("epoch %3zu  step %7llu  train_loss %.5f  test_accuracy %.4f  test_score %.5f  (%.1fs)\n",
              m.epoch, static_cast<unsigned long long>(m.step), m.train_loss, m.test_accuracy,
              m.test_score, m.wall_seconds);
  std::fflush(stdout);
}

int fail(const std::string& where, const std::string& what) {
  nlohmann::json j{{"error", what}, {"where", where}};
  std::cerr << j.dump() << '\n';
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fisher-information pruning and quantization toolkit"};
  app.require_subcommand(1);

  Common train_o, sweep_o, prune_o, quant_o, quantize_o, eval_o, report_o;
  std::string model;
  std::string method = "mag";
  std::int64_t count = 0;
  std::string out_path;
  std::string metric = "fisher_quant";
  std::uint32_t k = 3;
  std::uint32_t bits = 3;
  std::vector<std::string> prune_csvs;
  std::string quant_csv_path;

  auto* train = app.add_subcommand("train", "train a network and save parameters with its Fisher estimate");
  add_common(train, train_o);

  auto* sweep = app.add_subcommand("prune-sweep", "accuracy/test score over removal counts, one CSV per method");
  add_common(sweep, sweep_o);
  sweep->add_option("-m,--model", model, "model file")->required()->check(CLI::ExistingFile);

  auto* prune = app.add_subcommand("prune", "write a pruned copy of a model");
  add_common(prune, prune_o);
  prune->add_option("-m,--model", model, "model file")->required()->check(CLI::ExistingFile);
  prune->add_option("--method", method, "mag | fisher | mag_fisher")->default_val("mag");
  prune->add_option("-L,--count", count, "parameters to remove")->required();
  prune->add_option("--out", out_path, "output model file")->required();

  auto* quant = app.add_subcommand("quant-sweep", "accuracy/test score over average bits per method");
  add_common(quant, quant_o);
  quant->add_option("-m,--model", model, "model file (pruned or not)")->required()->check(CLI::ExistingFile);

  auto* quantize = app.add_subcommand("quantize", "write a quantized-model file");
  add_common(quantize, quantize_o);
  quantize->add_option("-m,--model", model, "model file")->required()->check(CLI::ExistingFile);
  quantize->add_option("--metric", metric, "fisher_quant | mag_quant | uniform")->default_val("fisher_quant");
  quantize->add_option("-k,--groups", k, "importance groups")->default_val(3);
  quantize->add_option("-b,--bits", bits, "uniform bit depth")->default_val(3);
  quantize->add_option("--out", out_path, "output model file")->required();

  auto* eval = app.add_subcommand("eval", "accuracy and test score of a model file");
  add_common(eval, eval_o);
  eval->add_option("-m,--model", model, "model file")->required()->check(CLI::ExistingFile);

  auto* report = app.add_subcommand("report", "operating points and compression ratios");
  add_common(report, report_o);
  report->add_option("-m,--model", model, "model file (for parameter counts)")->required()->check(CLI::ExistingFile);
  report->add_option("--prune-csv", prune_csvs, "prune sweep CSV(s)")->required()->check(CLI::ExistingFile);
  report->add_option("--quant-csv", quant_csv_path, "quant sweep CSV")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return fail("command line", e.what());
  }

  try {
    if (*train) {
      const auto cfg = resolve(train_o);
      const auto out = fp::cmd_train(cfg, print_metrics);
      std::printf("wrote %s and %s\n", out.model.c_str(), out.metrics.c_str());
    } else if (*sweep) {
      for (const auto& p : fp::cmd_prune_sweep(resolve(sweep_o), model))
        std::printf("wrote %s\n", p.c_str());
    } else if (*prune) {
      std::printf("wrote %s\n", fp::cmd_prune(resolve(prune_o), model, method, count, out_path).c_str());
    } else if (*quant) {
      std::printf("wrote %s\n", fp::cmd_quant_sweep(resolve(quant_o), model).c_str());
    } else if (*quantize) {
      const auto cfg = resolve(quantize_o);
      const fp::PlanOptions opt{k, fp::parse_quant_metric(metric), bits, cfg.codebook, cfg.float_width};
      std::printf("wrote %s\n", fp::cmd_quantize(cfg, model, opt, out_path).c_str());
    } else if (*eval) {
      const auto m = fp::cmd_eval(resolve(eval_o), model);
      std::printf("accuracy %s\ntest_score %s\n", fp::fmt(m.test_accuracy).c_str(),
                  fp::fmt(m.test_score).c_str());
    } else if (*report) {
      std::cout << fp::cmd_report(resolve(report_o), prune_csvs, quant_csv_path, model).text;
    }
  } catch (const fp::Error& e) {
    return fail(e.where(), e.message());
  } catch (const std::exception& e) {
    return fail("fisherprune", e.what());
  }
  return 0;
}
