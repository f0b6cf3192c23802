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

#include <bit>
#include <cstring>

#include "test_util.hpp"

namespace fp = fisherprune;

namespace {

struct Trained {
  fp::Network net;
  fp::FisherEstimate fisher;
  fp::Dataset data;
};

Trained small_trained() {
  Trained t{{}, {}, fp::synthetic_blobs(6, 40, 3, 4, 5.0)};
  fp::Rng init(1);
  t.net = fp::Network({4}, {fp::Layer::dropout(0.1), fp::Layer::dense(4, 12), fp::Layer::relu(),
                            fp::Layer::dense(12, 3), fp::Layer::softmax()}, init);
  fp::AdamState s = fp::AdamState::zeros(t.net.param_count());
  fp::Rng drop(2);
  for (int e = 0; e < 50; ++e) {
    const auto g = fp::backward(t.net, {t.data.images, t.data.labels}, &drop);
    fp::adam_step_inplace(s, t.net.params(), g.grad, fp::AdamHyper{});
  }
  t.fisher = fp::fisher_from_state(s, fp::AdamHyper{});
  return t;
}

bool bit_equal(const fp::Vector& a, const fp::Vector& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST(Varint, RoundTripAndBitPacking) {
  fp::io::Writer w;
  const std::vector<std::uint64_t> vals{0, 1, 127, 128, 300, 1ULL << 40, ~0ULL};
  for (auto v : vals) w.varint(v);
  fp::io::BitPacker bp(w);
  for (std::uint64_t i = 0; i < 37; ++i) bp.put(i % 8, 3);
  bp.put(0xFFFFFFFFULL, 32);
  bp.finish();
  fp::io::Reader r(w.data().data(), w.data().size(), "test");
  for (auto v : vals) EXPECT_EQ(r.varint("v"), v);
  fp::io::BitUnpacker bu(r);
  for (std::uint64_t i = 0; i < 37; ++i) EXPECT_EQ(bu.get(3, "bits"), i % 8);
  EXPECT_EQ(bu.get(32, "bits"), 0xFFFFFFFFULL);
  EXPECT_TRUE(r.done());
}

TEST(ModelFile, HeaderLayout) {
  const fp::Network net({2}, {fp::Layer::dense(2, 1), fp::Layer::softmax()});
  const auto bytes = fp::encode_model(net);
  ASSERT_GE(bytes.size(), 8u);
  EXPECT_EQ(std::memcmp(bytes.data(), "FPRN", 4), 0);
  EXPECT_EQ(bytes[4], 1);  // version, little-endian
  EXPECT_EQ(bytes[5], 0);
  // magic, version, rank + 1 dim, layer count, 2 layer records, count, 3 params
  EXPECT_EQ(bytes.size(), 4 + 4 + 4 + 4 + 4 + 2 * (12 + 8) + 8 + 3 * 8u);
}

TEST(ModelFile, RoundTripWithFisherAndMask) {
  Trained t = small_trained();
  t.net.set_mask(fp::prune(t.net.params(), t.fisher, {20, 0.05}, t.net.fc_scope()));
  const auto dir = fptest::scratch_dir("model_rt");
  const std::string path = (dir / "m.fprn").string();
  fp::save_model(path, t.net, &t.fisher);
  const auto mf = fp::load_model(path);
  EXPECT_TRUE(bit_equal(mf.net.params(), t.net.params()));
  ASSERT_TRUE(mf.fisher);
  EXPECT_TRUE(bit_equal(mf.fisher->values, t.fisher.values));
  ASSERT_TRUE(mf.net.mask());
  EXPECT_EQ(*mf.net.mask(), *t.net.mask());
  EXPECT_TRUE(fp::same_model(mf.net, t.net));
  EXPECT_EQ(fp::evaluate(mf.net, t.data.images, t.data.labels),
            fp::evaluate(t.net, t.data.images, t.data.labels));
  EXPECT_EQ(fp::encode_model(mf.net, &*mf.fisher), fp::read_file(path));
}

TEST(ModelFile, QuantizedRoundTrip) {
  const Trained t = small_trained();
  for (auto kind : {fp::CodebookKind::Affine, fp::CodebookKind::KMeans}) {
    fp::Network pruned = t.net;
    pruned.set_mask(fp::prune(t.net.params(), t.fisher, {30, 0.05}, t.net.fc_scope()));
    fp::QuantizationPlan plan;
    const fp::Network q = fp::quantized_network(
        pruned, &t.fisher, {3, fp::ImportanceMetric::Fisher, 3, kind}, &plan);
    const fp::QuantizedSection sec = fp::encode_plan(q.params(), plan);
    const auto bytes = fp::encode_model(q, &t.fisher, &sec);
    const auto mf = fp::decode_model(bytes);
    ASSERT_TRUE(mf.quantized);
    EXPECT_EQ(mf.quantized->plan, plan);
    EXPECT_EQ(*mf.quantized, sec);
    EXPECT_TRUE(bit_equal(mf.net.params(), q.params()));
    EXPECT_EQ(*mf.net.mask(), *q.mask());
    EXPECT_EQ(fp::evaluate(mf.net, t.data.images, t.data.labels),
              fp::evaluate(q, t.data.images, t.data.labels));
  }
}

TEST(ModelFile, RejectsCorruption) {
  const Trained t = small_trained();
  const auto good = fp::encode_model(t.net, &t.fisher);
  auto bad = good;
  bad[0] = 'X';
  EXPECT_THROW(fp::decode_model(bad), fp::Error);
  bad = good;
  bad[4] = 2;
  EXPECT_THROW(fp::decode_model(bad), fp::Error);
  bad = good;
  bad.pop_back();
  EXPECT_THROW(fp::decode_model(bad), fp::Error);
  bad = good;
  bad.push_back(0);
  EXPECT_THROW(fp::decode_model(bad), fp::Error);
  // Unknown section tag.
  bad = fp::encode_model(t.net);
  for (char c : std::string("ABCD")) bad.push_back(static_cast<std::uint8_t>(c));
  for (int i = 0; i < 8; ++i) bad.push_back(0);
  EXPECT_THROW(fp::decode_model(bad), fp::Error);
}

TEST(ModelFile, RejectsTamperedQuantizedPayload) {
  const Trained t = small_trained();
  fp::Network pruned = t.net;
  pruned.set_mask(fp::prune(t.net.params(), t.fisher, {30, 0.0}, t.net.fc_scope()));
  fp::QuantizationPlan plan;
  fp::Network q = fp::quantized_network(pruned, &t.fisher, {2, fp::ImportanceMetric::Magnitude}, &plan);
  const auto sec = fp::encode_plan(q.params(), plan);
  q.params()[plan.groups[0].members[0]] += 1e-3;
  const auto bytes = fp::encode_model(q, nullptr, &sec);
  EXPECT_THROW(fp::decode_model(bytes), fp::Error);
}

TEST(ModelFile, MnistCnnRoundTrip) {
  fp::Rng rng(1);
  const fp::Network net(fp::paper_cnn_input(), fp::paper_cnn_layers(), rng);
  const auto mf = fp::decode_model(fp::encode_model(net));
  EXPECT_TRUE(bit_equal(mf.net.params(), net.params()));
  EXPECT_EQ(mf.net.fc_scope().size(), 591242u);
}
