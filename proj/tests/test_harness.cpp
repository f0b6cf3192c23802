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

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "test_util.hpp"

namespace fp = fisherprune;

namespace {

fp::ExperimentConfig blobs_config(const std::filesystem::path& out) {
  auto cfg = fp::parse_config_string(R"(
    preset = custom
    input_shape = 4
    layers = dense:4:16,relu,dropout:0.1,dense:16:3,softmax
    seed = 5
    epochs = 5
    batch_size = 16
    dataset = blobs
    blobs_per_class = 100
    blobs_test_per_class = 50
    blobs_classes = 3
    blobs_dim = 4
    blobs_separation = 8
    prune_counts = 10,30,60
    quant_prune_fraction = 0.5
    quant_k_min = 2
    quant_k_max = 3
    uniform_bits_min = 1
    uniform_bits_max = 3
  )");
  cfg.output_dir = out.string();
  return cfg;
}

// Accuracy of assigning each point to the closest empirical class mean.
double nearest_mean_accuracy(const fp::Dataset& d) {
  const std::size_t n = d.size(), dim = d.images.shape()[1], k = d.classes();
  std::vector<fp::Vector> mean(k, fp::Vector(dim, 0.0));
  std::vector<double> cnt(k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    cnt[d.labels[i]] += 1.0;
    for (std::size_t j = 0; j < dim; ++j) mean[d.labels[i]][j] += d.images.at(i, j);
  }
  for (std::size_t c = 0; c < k; ++c)
    for (double& m : mean[c]) m /= cnt[c];
  std::size_t hit = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    double bd = INFINITY;
    for (std::size_t c = 0; c < k; ++c) {
      double dd = 0.0;
      for (std::size_t j = 0; j < dim; ++j) dd += std::pow(d.images.at(i, j) - mean[c][j], 2);
      if (dd < bd) bd = dd, best = c;
    }
    hit += best == d.labels[i];
  }
  return static_cast<double>(hit) / static_cast<double>(n);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

}  // namespace

TEST(Config, ParsesKeysCommentsAndOverrides) {
  const auto cfg = fp::parse_config_string(
      "# comment\nseed = 7  # trailing\nalpha=0.01\nupdate_rule = paper_line7\n"
      "prune_methods = mag, fisher\nprune_counts = 5,1\ncodebook = kmeans\nseed = 8\n");
  EXPECT_EQ(cfg.seed, 8u);
  EXPECT_EQ(cfg.adam.alpha, 0.01);
  EXPECT_EQ(cfg.adam.update_rule, fp::UpdateRule::PaperLine7);
  EXPECT_EQ(cfg.prune_methods, (std::vector<std::string>{"mag", "fisher"}));
  EXPECT_EQ(cfg.codebook, fp::CodebookKind::KMeans);
  EXPECT_EQ(fp::coarse_schedule(cfg, 10), (std::vector<std::int64_t>{0, 1, 5}));
}

TEST(Config, Errors) {
  EXPECT_THROW(fp::parse_config_string("nonsense = 1\n"), fp::Error);
  EXPECT_THROW(fp::parse_config_string("seed\n"), fp::Error);
  EXPECT_THROW(fp::parse_config_string("epochs = many\n"), fp::Error);
  EXPECT_THROW(fp::parse_config_string("prune_methods = mag,random\n"), fp::Error);
  EXPECT_THROW(fp::parse_config_string("dataset = blobs\n").validate(), fp::Error);  // no seed
  EXPECT_THROW(fp::parse_config_string("seed = 1\n").validate(), fp::Error);  // no mnist paths
  try {
    fp::parse_config_string("seed = 1\nfoo = 2\n");
  } catch (const fp::Error& e) {
    EXPECT_EQ(e.where(), "foo");
  }
}

TEST(Config, LoadResolvesRelativePaths) {
  const auto dir = fptest::scratch_dir("cfg_paths");
  std::filesystem::create_directories(dir / "cfg");
  std::ofstream(dir / "cfg" / "x.cfg") << "seed = 1\ntrain_images = ../d/a.gz\noutput_dir = out\n"
                                          "test_images = /abs/b.gz\n";
  const auto cfg = fp::load_config((dir / "cfg" / "x.cfg").string());
  EXPECT_EQ(std::filesystem::path(cfg.train_images), dir / "cfg" / "../d/a.gz");
  EXPECT_EQ(std::filesystem::path(cfg.output_dir), dir / "cfg" / "out");
  EXPECT_EQ(cfg.test_images, "/abs/b.gz");
}

TEST(Config, BundledDeskConfigIsValid) {
  const auto cfg = fp::load_config(FISHERPRUNE_SOURCE_DIR "/configs/desk_mlp.cfg");
  EXPECT_NO_THROW(cfg.validate());
  fp::Rng rng(1);
  EXPECT_EQ(cfg.build_network(rng).fc_scope().size(), std::size_t{784 * 128 + 128 + 128 * 10 + 10});
}

TEST(Schedules, FractionsStartAtZeroAndStayInRange) {
  const auto c = fp::counts_from_fractions(0.1, 1.0, 0.3, 100);
  EXPECT_EQ(c, (std::vector<std::int64_t>{0, 10, 40, 70, 100}));
  EXPECT_EQ(fp::counts_from_fractions(0.5, 0.4, 0.1, 100), (std::vector<std::int64_t>{0}));
  fp::ExperimentConfig cfg;
  cfg.prune_counts = {5, 200};
  EXPECT_THROW(fp::coarse_schedule(cfg, 100), fp::Error);
}

TEST(Train, ZeroEpochsReturnsInitialization) {
  auto cfg = blobs_config(fptest::scratch_dir("train0"));
  cfg.epochs = 0;
  const auto data = fp::load_data(cfg);
  const auto r = fp::train(cfg, data.train, data.test);
  fp::Rng init(5);
  EXPECT_TRUE(fp::same_model(r.net, cfg.build_network(init)));
  EXPECT_FALSE(r.fisher);
  ASSERT_EQ(r.history.size(), 1u);
  EXPECT_NEAR(r.history[0].test_accuracy, 1.0 / 3.0, 0.25);
}

TEST(Train, SeparableBlobsReachHighTrainAccuracy) {
  auto cfg = blobs_config(fptest::scratch_dir("train5"));
  cfg.layers = "dense:4:16,relu,dense:16:3,softmax";
  cfg.epochs = 20;
  cfg.adam.alpha = 0.01;
  const auto data = fp::load_data(cfg);
  const auto r = fp::train(cfg, data.train, data.test);
  EXPECT_GE(fp::evaluate(r.net, data.train).accuracy, nearest_mean_accuracy(data.train) - 0.01);
  ASSERT_TRUE(r.fisher);
  EXPECT_EQ(r.history.size(), 21u);
  EXPECT_EQ(r.history.back().step, 20u * ((300 + 15) / 16));
  for (double f : r.fisher->values) EXPECT_GE(f, 0.0);
}

TEST(Csv, PruneAndQuantRoundTrip) {
  const auto dir = fptest::scratch_dir("csv");
  const std::vector<fp::PruneSweepRow> rows{{0, 0.0, 0.9, 0.3, fp::PruneMethod::Combined, 0.05},
                                            {7, 0.1 + 0.2, 1.0 / 3.0, 2.5e-7, fp::PruneMethod::Combined, 0.05}};
  fp::write_text(dir / "p.csv", fp::prune_csv(rows));
  const auto back = fp::read_prune_csv((dir / "p.csv").string());
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].fraction_removed, 0.1 + 0.2);
  EXPECT_EQ(back[1].accuracy, 1.0 / 3.0);
  EXPECT_EQ(slurp(dir / "p.csv").substr(0, 48), "L,fraction_removed,accuracy,test_score,method,r\n");
  const std::vector<fp::QuantSweepRow> q{{"original", 0, 32, 0.9, 0.2}, {"fisher_quant", 3, 1.25, 0.88, 0.3}};
  fp::write_text(dir / "q.csv", fp::quant_csv(q));
  const auto qb = fp::read_quant_csv((dir / "q.csv").string());
  EXPECT_EQ(qb[1].average_bits, 1.25);
  EXPECT_EQ(qb[1].k, 3u);
  std::ofstream(dir / "bad.csv") << "L,wrong\n";
  EXPECT_THROW(fp::read_prune_csv((dir / "bad.csv").string()), fp::Error);
}

TEST(Report, PicksLargestRemovalAndFewestBitsWithinTolerance) {
  fp::ExperimentConfig cfg;
  cfg.max_loss = 0.01;
  cfg.quant_max_loss = 0.01;
  const auto M = fp::PruneMethod::Combined;
  const std::vector<fp::PruneSweepRow> prune{{0, 0.0, 0.95, 0, M, 0.05},
                                             {500, 0.5, 0.945, 0, M, 0.05},
                                             {900, 0.9, 0.94, 0, M, 0.05},
                                             {950, 0.95, 0.90, 0, M, 0.05},
                                             {990, 0.99, 0.95, 0, fp::PruneMethod::Magnitude, 0}};
  const std::vector<fp::QuantSweepRow> quant{{"original", 0, 32, 0.94, 0},
                                             {"fisher_quant", 3, 1.5, 0.935, 0},
                                             {"fisher_quant", 4, 1.2, 0.92, 0},
                                             {"mag_quant", 3, 1.0, 0.94, 0}};
  const auto op = fp::choose_operating_points(cfg, prune, quant, 1200, 1000);
  ASSERT_TRUE(op.prune && op.quant && op.plain);
  EXPECT_EQ(op.prune->count, 900);
  EXPECT_EQ(op.quant->average_bits, 1.5);
  EXPECT_DOUBLE_EQ(op.plain->pruning_ratio, 10.0);
  EXPECT_DOUBLE_EQ(op.plain->total_ratio, 10.0 * 32.0 / 1.5);
  EXPECT_NE(fp::report_text(cfg, op).find("remove 900"), std::string::npos);
}

TEST(Report, NoFeasiblePoint) {
  fp::ExperimentConfig cfg;
  const std::vector<fp::PruneSweepRow> prune{{5, 0.5, 0.9, 0, fp::PruneMethod::Combined, 0.05}};
  const std::vector<fp::QuantSweepRow> quant{{"fisher_quant", 3, 1.5, 0.9, 0}};
  const auto op = fp::choose_operating_points(cfg, prune, quant, 10, 10);
  EXPECT_FALSE(op.prune);
  EXPECT_FALSE(op.quant);
  EXPECT_FALSE(op.plain);
  EXPECT_NE(fp::report_text(cfg, op).find("no feasible point"), std::string::npos);
  EXPECT_NE(fp::report_csv(cfg, op).find("no feasible point"), std::string::npos);
}

TEST(Commands, EndToEndOnBlobsIsDeterministic) {
  auto run = [](const std::string& name) {
    const auto dir = fptest::scratch_dir(name);
    const auto cfg = blobs_config(dir);
    const auto t = fp::cmd_train(cfg);
    fp::cmd_prune_sweep(cfg, t.model.string());
    fp::cmd_quant_sweep(cfg, t.model.string());
    return dir;
  };
  const auto a = run("e2e_a"), b = run("e2e_b");
  for (const char* f : {"model.fprn", "metrics.csv", "prune_mag.csv", "prune_fisher.csv",
                        "prune_mag_fisher.csv", "quant.csv", "prune_sweep.meta"}) {
    ASSERT_TRUE(std::filesystem::exists(a / f)) << f;
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  const auto cfg = blobs_config(a);
  const auto rows = fp::read_quant_csv((a / "quant.csv").string());
  ASSERT_EQ(rows.size(), 1u + 2u * 2u + 3u);
  EXPECT_EQ(rows[0].method, "original");
  const auto rep = fp::cmd_report(cfg, {(a / "prune_mag_fisher.csv").string()},
                                  (a / "quant.csv").string(), (a / "model.fprn").string());
  EXPECT_TRUE(std::filesystem::exists(a / "report.csv"));
  EXPECT_FALSE(rep.text.empty());

  // Stored rows re-derive exactly.
  const auto mf = fp::load_model((a / "model.fprn").string());
  const auto data = fp::load_data(cfg);
  const auto prune_rows = fp::read_prune_csv((a / "prune_mag_fisher.csv").string());
  EXPECT_TRUE(fp::spot_check_prune_rows(mf.net, *mf.fisher, prune_rows, data.test, 3, 1));

  // prune + quantize + eval subcommands.
  fp::cmd_prune(cfg, (a / "model.fprn").string(), "mag_fisher", 30, (a / "pruned.fprn").string());
  const auto pruned = fp::load_model((a / "pruned.fprn").string());
  EXPECT_EQ(pruned.net.mask()->removed_count(), 30u);
  fp::cmd_quantize(cfg, (a / "pruned.fprn").string(), {3, fp::ImportanceMetric::Fisher},
                   (a / "q.fprn").string());
  const auto q = fp::load_model((a / "q.fprn").string());
  ASSERT_TRUE(q.quantized);
  EXPECT_EQ(q.net.mask()->removed_count(), 30u);
  const auto e = fp::cmd_eval(cfg, (a / "q.fprn").string());
  EXPECT_EQ(e.test_accuracy, fp::evaluate(q.net, data.test).accuracy);
}

TEST(Commands, MissingFisherSectionIsReported) {
  const auto dir = fptest::scratch_dir("nofisher");
  auto cfg = blobs_config(dir);
  fp::Rng rng(1);
  fp::save_model((dir / "m.fprn").string(), cfg.build_network(rng));
  EXPECT_THROW(fp::cmd_prune_sweep(cfg, (dir / "m.fprn").string()), fp::Error);
  cfg.prune_methods = {"mag"};
  EXPECT_NO_THROW(fp::cmd_prune_sweep(cfg, (dir / "m.fprn").string()));
}
