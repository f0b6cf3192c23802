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

#include <zlib.h>

#include <cstdint>
#include <fstream>
#include <set>

#include "test_util.hpp"

namespace fp = fisherprune;

namespace {

void put_be32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) b.push_back(static_cast<std::uint8_t>(v >> s));
}

void write_bytes(const std::filesystem::path& p, const std::vector<std::uint8_t>& b) {
  std::ofstream f(p, std::ios::binary);
  f.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

// Two 2x3 images and their labels, built byte by byte.
struct Fixture {
  std::vector<std::uint8_t> images, labels;
  Fixture() {
    put_be32(images, 2051);
    put_be32(images, 2);
    put_be32(images, 2);
    put_be32(images, 3);
    for (std::uint8_t v : {0, 51, 102, 153, 204, 255, 255, 0, 128, 127, 1, 254}) images.push_back(v);
    put_be32(labels, 2049);
    put_be32(labels, 2);
    labels.push_back(7);
    labels.push_back(3);
  }
};

}  // namespace

TEST(LoadIdx, HandBuiltFixture) {
  const auto dir = fptest::scratch_dir("idx_fixture");
  const Fixture fx;
  write_bytes(dir / "img", fx.images);
  write_bytes(dir / "lab", fx.labels);
  const auto ds = fp::load_idx((dir / "img").string(), (dir / "lab").string());
  EXPECT_EQ(ds.images.shape(), (fp::Shape{2, 1, 2, 3}));
  EXPECT_EQ(ds.labels, (std::vector<std::uint32_t>{7, 3}));
  EXPECT_DOUBLE_EQ(ds.images[1], 0.2);
  EXPECT_DOUBLE_EQ(ds.images[5], 1.0);
  EXPECT_DOUBLE_EQ(ds.images[6], 1.0);
  EXPECT_EQ(ds.images[7], 0.0);
  const auto bin = fp::load_idx((dir / "img").string(), (dir / "lab").string(), fp::Split::Train, {true});
  EXPECT_EQ(bin.images.data(), (fp::Vector{0, 0, 0, 1, 1, 1, 1, 0, 1, 0, 0, 1}));
}

TEST(LoadIdx, GzipAndRawAgreeAndRoundTrip) {
  const auto dir = fptest::scratch_dir("idx_gzip");
  const Fixture fx;
  write_bytes(dir / "img", fx.images);
  write_bytes(dir / "lab", fx.labels);
  const auto raw = fp::load_idx((dir / "img").string(), (dir / "lab").string());
  fp::write_idx(raw, (dir / "img.gz").string(), (dir / "lab.gz").string(), true);
  const auto gz = fp::load_idx((dir / "img.gz").string(), (dir / "lab.gz").string());
  EXPECT_EQ(gz.images, raw.images);
  EXPECT_EQ(gz.labels, raw.labels);
  fp::write_idx(raw, (dir / "img2").string(), (dir / "lab2").string(), false);
  std::ifstream a(dir / "img2", std::ios::binary);
  const std::vector<std::uint8_t> back{std::istreambuf_iterator<char>(a), {}};
  EXPECT_EQ(back, fx.images);
}

TEST(LoadIdx, BadMagicNamesFile) {
  const auto dir = fptest::scratch_dir("idx_magic");
  Fixture fx;
  fx.images[3] = 0x04;  // 2052
  write_bytes(dir / "img", fx.images);
  write_bytes(dir / "lab", fx.labels);
  try {
    fp::load_idx((dir / "img").string(), (dir / "lab").string());
    FAIL();
  } catch (const fp::Error& e) {
    EXPECT_NE(e.where().find("img"), std::string::npos);
    EXPECT_NE(e.message().find("magic"), std::string::npos);
  }
}

TEST(LoadIdx, TruncationTrailingAndCountMismatch) {
  const auto dir = fptest::scratch_dir("idx_bad");
  const Fixture fx;
  auto expect_error = [&](std::vector<std::uint8_t> img, std::vector<std::uint8_t> lab,
                          const std::string& needle) {
    write_bytes(dir / "img", img);
    write_bytes(dir / "lab", lab);
    try {
      fp::load_idx((dir / "img").string(), (dir / "lab").string());
      ADD_FAILURE() << "no error for " << needle;
    } catch (const fp::Error& e) {
      EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
    }
  };
  auto short_img = fx.images;
  short_img.pop_back();
  expect_error(short_img, fx.labels, "truncated");
  auto long_img = fx.images;
  long_img.push_back(0);
  expect_error(long_img, fx.labels, "trailing");
  auto lab3 = fx.labels;
  lab3[7] = 3;
  lab3.push_back(1);
  expect_error(fx.images, lab3, "label count");
  expect_error({0x00, 0x00}, fx.labels, "truncated");
  EXPECT_THROW(fp::load_idx((dir / "missing").string(), (dir / "lab").string()), fp::Error);
}

TEST(Batches, SizesAndCoverage) {
  fp::Rng rng(1);
  const auto b = fp::epoch_batches(600, 256, rng);
  ASSERT_EQ(b.size(), 3u);
  EXPECT_EQ(b[0].size(), 256u);
  EXPECT_EQ(b[1].size(), 256u);
  EXPECT_EQ(b[2].size(), 88u);
  std::set<std::size_t> seen;
  for (const auto& batch : b) seen.insert(batch.begin(), batch.end());
  EXPECT_EQ(seen.size(), 600u);
  EXPECT_EQ(*seen.rbegin(), 599u);
  EXPECT_THROW(fp::epoch_batches(10, 0, rng), fp::Error);
}

TEST(Batches, SeededStreamIsReproducibleAndReshuffles) {
  const fp::Dataset ds = fp::synthetic_blobs(1, 50, 2, 3, 4.0);
  const fp::BatchStream a(ds, 32, 9), b(ds, 32, 9), c(ds, 32, 10);
  EXPECT_EQ(a.epoch(1), b.epoch(1));
  EXPECT_NE(a.epoch(1), a.epoch(2));
  EXPECT_NE(a.epoch(1), c.epoch(1));
  const fp::Batch batch = a.batch(a.epoch(1)[0]);
  EXPECT_EQ(batch.inputs.rows(), 32u);
  EXPECT_EQ(batch.labels[0], ds.labels[a.epoch(1)[0][0]]);
}

TEST(Blobs, BalancedSeparatedAndSeeded) {
  const auto ds = fp::synthetic_blobs(3, 100, 2, 5, 10.0);
  EXPECT_EQ(ds.size(), 200u);
  EXPECT_EQ(ds.classes(), 2u);
  EXPECT_EQ(ds.images.shape(), (fp::Shape{200, 5}));
  fp::Vector mean0(5, 0.0), mean1(5, 0.0);
  for (std::size_t i = 0; i < 200; ++i)
    for (std::size_t j = 0; j < 5; ++j) (ds.labels[i] ? mean1 : mean0)[j] += ds.images.at(i, j) / 100.0;
  double d2 = 0.0;
  for (std::size_t j = 0; j < 5; ++j) d2 += (mean0[j] - mean1[j]) * (mean0[j] - mean1[j]);
  EXPECT_NEAR(std::sqrt(d2), 10.0, 1.0);
  EXPECT_EQ(fp::synthetic_blobs(3, 100, 2, 5, 10.0).images, ds.images);
  EXPECT_THROW(fp::synthetic_blobs(3, 10, 1, 5, 1.0), fp::Error);
}

TEST(Blobs, SplitsShareClassCentersButNotSamples) {
  const auto train = fp::synthetic_blobs(4, 400, 3, 4, 12.0);
  const auto test = fp::synthetic_blobs(4, 400, 3, 4, 12.0, fp::Split::Test);
  EXPECT_EQ(test.split, fp::Split::Test);
  EXPECT_NE(train.images, test.images);
  for (std::uint32_t c = 0; c < 3; ++c)
    for (std::size_t j = 0; j < 4; ++j) {
      double a = 0.0, b = 0.0;
      for (std::size_t i = 0; i < train.size(); ++i)
        if (train.labels[i] == c) {
          a += train.images.at(i, j) / 400.0;
          b += test.images.at(i, j) / 400.0;
        }
      EXPECT_NEAR(a, b, 0.3);
    }
}

TEST(Dataset, HeadAndGather) {
  const auto ds = fp::synthetic_blobs(2, 5, 3, 2, 1.0);
  EXPECT_EQ(ds.head(4).size(), 4u);
  EXPECT_EQ(ds.head(100).size(), ds.size());
  const std::vector<std::size_t> idx{4, 0};
  const fp::Batch b = ds.gather(idx);
  EXPECT_EQ(b.labels, (std::vector<std::uint32_t>{ds.labels[4], ds.labels[0]}));
  EXPECT_EQ(b.inputs.at(0, 1), ds.images.at(4, 1));
}

TEST(BundledSample, LoadsAndIsBalanced) {
  const std::string d = FISHERPRUNE_DATA_DIR "/mnist5k/";
  const auto train = fp::load_idx(d + "train-images-idx3-ubyte.gz", d + "train-labels-idx1-ubyte.gz");
  const auto test = fp::load_idx(d + "test-images-idx3-ubyte.gz", d + "test-labels-idx1-ubyte.gz");
  EXPECT_EQ(train.images.shape(), (fp::Shape{4000, 1, 28, 28}));
  EXPECT_EQ(test.size(), 1000u);
  EXPECT_EQ(train.classes(), 10u);
}
