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

// Model file layout (all integers and floats little-endian):
//
//   "FPRN"                      magic, 4 bytes
//   u32 version                 currently 1
//   u32 rank, u32 dims[rank]    per-example input shape
//   u32 layer_count
//   layer_count x { u32 kind, u32 in, u32 out, f64 drop_rate }
//   u64 param_count, f64 params[param_count]
//   sections until end of file: { char tag[4], u64 payload_bytes, payload }
//
// Sections (each at most once, in this order when present):
//   "FISH"  f64 values[param_count]                      Fisher diagonal
//   "MASK"  u64 scope_count, varint deltas of the scope,  prune mask
//           bit-packed keep flags (param_count bits, LSB first)
//   "QUNT"  quantization plan, see write_plan()
//
// Unknown section tags are an error; the reader never skips data silently.

#ifndef FISHERPRUNE_SERIALIZE_HPP_
#define FISHERPRUNE_SERIALIZE_HPP_

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "fisherprune/common.hpp"
#include "fisherprune/fisher.hpp"
#include "fisherprune/mask.hpp"
#include "fisherprune/network.hpp"
#include "fisherprune/quantization.hpp"

namespace fisherprune {

inline constexpr char kModelMagic[4] = {'F', 'P', 'R', 'N'};
inline constexpr std::uint32_t kModelVersion = 1;

namespace io {

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) { le(v); }
  void u64(std::uint64_t v) { le(v); }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v)); }
  void varint(std::uint64_t v) {
    while (v >= 0x80) {
      out_.push_back(static_cast<std::uint8_t>(v | 0x80));
      v >>= 7;
    }
    out_.push_back(static_cast<std::uint8_t>(v));
  }
  void section(const char tag[4], const Writer& payload) {
    bytes(tag, 4);
    u64(payload.out_.size());
    bytes(payload.out_.data(), payload.out_.size());
  }
  const std::vector<std::uint8_t>& data() const noexcept { return out_; }

 private:
  template <typename T>
  void le(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  Reader(const std::uint8_t* p, std::size_t n, std::string context)
      : p_(p), n_(n), ctx_(std::move(context)) {}

  bool done() const noexcept { return at_ == n_; }
  std::size_t remaining() const noexcept { return n_ - at_; }

  const std::uint8_t* take(std::size_t k, const char* field) {
    if (k > remaining()) throw Error(ctx_, std::string("truncated at ") + field);
    const std::uint8_t* r = p_ + at_;
    at_ += k;
    return r;
  }
  std::uint8_t u8(const char* f) { return *take(1, f); }
  std::uint32_t u32(const char* f) { return le<std::uint32_t>(f); }
  std::uint64_t u64(const char* f) { return le<std::uint64_t>(f); }
  double f64(const char* f) { return std::bit_cast<double>(le<std::uint64_t>(f)); }
  std::uint64_t varint(const char* f) {
    std::uint64_t v = 0;
    for (int shift = 0; shift < 64; shift += 7) {
      const std::uint8_t b = u8(f);
      v |= std::uint64_t{b & 0x7Fu} << shift;
      if (!(b & 0x80)) return v;
    }
    throw Error(ctx_, std::string("varint too long at ") + f);
  }
  const std::string& context() const noexcept { return ctx_; }

 private:
  template <typename T>
  T le(const char* f) {
    const std::uint8_t* b = take(sizeof(T), f);
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(b[i]) << (8 * i);
    return v;
  }
  const std::uint8_t* p_;
  std::size_t n_;
  std::size_t at_ = 0;
  std::string ctx_;
};

/// LSB-first packing of fixed-width codes.
class BitPacker {
 public:
  explicit BitPacker(Writer& w) : w_(w) {}
  void put(std::uint64_t code, std::uint32_t bits) {
    for (std::uint32_t i = 0; i < bits; ++i) {
      if ((code >> i) & 1u) cur_ |= static_cast<std::uint8_t>(1u << fill_);
      if (++fill_ == 8) flush();
    }
  }
  void finish() {
    if (fill_) flush();
  }

 private:
  void flush() {
    w_.u8(cur_);
    cur_ = 0;
    fill_ = 0;
  }
  Writer& w_;
  std::uint8_t cur_ = 0;
  unsigned fill_ = 0;
};

class BitUnpacker {
 public:
  explicit BitUnpacker(Reader& r) : r_(r) {}
  std::uint64_t get(std::uint32_t bits, const char* field) {
    std::uint64_t v = 0;
    for (std::uint32_t i = 0; i < bits; ++i) {
      if (left_ == 0) {
        cur_ = r_.u8(field);
        left_ = 8;
      }
      v |= std::uint64_t{cur_ & 1u} << i;
      cur_ >>= 1;
      --left_;
    }
    return v;
  }

 private:
  Reader& r_;
  std::uint8_t cur_ = 0;
  unsigned left_ = 0;
};

inline void write_ascending(Writer& w, const std::vector<std::size_t>& idx) {
  std::size_t prev = 0;
  bool first = true;
  for (std::size_t i : idx) {
    if (!first && i <= prev) throw Error("serialize", "indices not strictly ascending");
    w.varint(first ? i : i - prev);
    prev = i;
    first = false;
  }
}

inline std::vector<std::size_t> read_ascending(Reader& r, std::uint64_t count, std::size_t limit,
                                               const char* field) {
  std::vector<std::size_t> idx;
  idx.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, limit)));
  std::uint64_t cur = 0;
  for (std::uint64_t k = 0; k < count; ++k) {
    const std::uint64_t d = r.varint(field);
    if (k > 0 && d == 0) throw Error(r.context(), std::string("repeated index in ") + field);
    cur = k == 0 ? d : cur + d;
    if (cur >= limit) throw Error(r.context(), std::string("index out of range in ") + field);
    idx.push_back(static_cast<std::size_t>(cur));
  }
  return idx;
}

}  // namespace io

/// Quantized parameters as stored: the plan plus one level index per member.
struct QuantizedSection {
  QuantizationPlan plan;
  std::vector<std::vector<std::uint64_t>> codes;  // per group, member order

  friend bool operator==(const QuantizedSection&, const QuantizedSection&) = default;
};

/// Level indices of the current parameters under `plan`.
inline QuantizedSection encode_plan(const Vector& params, const QuantizationPlan& plan) {
  QuantizedSection q{plan, {}};
  for (const auto& g : plan.groups) {
    auto& c = q.codes.emplace_back();
    c.reserve(g.members.size());
    for (std::size_t i : g.members) c.push_back(g.codebook.encode(params[i]));
  }
  return q;
}

struct ModelFile {
  Network net;                            // mask, if any, is installed on the network
  std::optional<FisherEstimate> fisher;
  std::optional<QuantizedSection> quantized;
};

namespace io {

inline void write_plan(Writer& w, const QuantizedSection& q) {
  const auto& plan = q.plan;
  w.u32(static_cast<std::uint32_t>(plan.metric));
  w.u32(plan.float_width);
  w.u32(plan.requested_groups);
  w.u32(static_cast<std::uint32_t>(plan.groups.size()));
  for (const auto& g : plan.groups) {
    w.u32(g.bits);
    w.f64(g.centroid);
    w.u32(static_cast<std::uint32_t>(g.codebook.kind));
    w.u32(g.codebook.bits);
    w.f64(g.codebook.lo);
    w.f64(g.codebook.hi);
    w.u32(static_cast<std::uint32_t>(g.codebook.table.size()));
    for (double v : g.codebook.table) w.f64(v);
    w.u64(g.members.size());
  }
  for (const auto& g : plan.groups) write_ascending(w, g.members);
  for (std::size_t gi = 0; gi < plan.groups.size(); ++gi) {
    const auto& g = plan.groups[gi];
    const std::uint32_t width = g.codebook.index_bits();
    BitPacker bp(w);
    for (std::uint64_t code : q.codes.at(gi)) bp.put(code, width);
    bp.finish();
  }
}

inline QuantizedSection read_plan(Reader& r, std::size_t param_count) {
  QuantizedSection q;
  auto& plan = q.plan;
  const std::uint32_t metric = r.u32("quant metric");
  if (metric > 2) throw Error(r.context(), "unknown quantization metric");
  plan.metric = static_cast<ImportanceMetric>(metric);
  plan.float_width = r.u32("float width");
  plan.requested_groups = r.u32("requested groups");
  const std::uint32_t ngroups = r.u32("group count");
  if (ngroups > 64) throw Error(r.context(), "implausible group count");
  std::vector<std::uint64_t> counts;
  for (std::uint32_t gi = 0; gi < ngroups; ++gi) {
    ImportanceGroup g;
    g.bits = r.u32("group bits");
    g.centroid = r.f64("group centroid");
    const std::uint32_t kind = r.u32("codebook kind");
    if (kind > 1) throw Error(r.context(), "unknown codebook kind");
    g.codebook.kind = static_cast<CodebookKind>(kind);
    g.codebook.bits = r.u32("codebook bits");
    if (g.codebook.bits < 1 || g.codebook.bits > 32)
      throw Error(r.context(), "codebook bits outside [1, 32]");
    g.codebook.lo = r.f64("codebook lo");
    g.codebook.hi = r.f64("codebook hi");
    const std::uint32_t tsize = r.u32("level count");
    if (tsize > r.remaining() / 8) throw Error(r.context(), "truncated at level table");
    for (std::uint32_t t = 0; t < tsize; ++t) g.codebook.table.push_back(r.f64("level"));
    if (g.codebook.kind == CodebookKind::KMeans && g.codebook.table.empty())
      throw Error(r.context(), "k-means codebook without levels");
    counts.push_back(r.u64("member count"));
    plan.groups.push_back(std::move(g));
  }
  for (std::uint32_t gi = 0; gi < ngroups; ++gi)
    plan.groups[gi].members = read_ascending(r, counts[gi], param_count, "group members");
  for (auto& g : plan.groups) {
    const std::uint32_t width = g.codebook.index_bits();
    BitUnpacker bu(r);
    auto& c = q.codes.emplace_back();
    for (std::size_t k = 0; k < g.members.size(); ++k) {
      const std::uint64_t code = bu.get(width, "level codes");
      if (code >= g.codebook.level_count()) throw Error(r.context(), "level code out of range");
      c.push_back(code);
    }
  }
  return q;
}

}  // namespace io

/// Serializes a model. The network's mask, when installed, becomes the MASK
/// section.
inline std::vector<std::uint8_t> encode_model(const Network& net,
                                              const FisherEstimate* fisher = nullptr,
                                              const QuantizedSection* quantized = nullptr) {
  io::Writer w;
  w.bytes(kModelMagic, 4);
  w.u32(kModelVersion);
  w.u32(static_cast<std::uint32_t>(net.input_shape().size()));
  for (std::size_t d : net.input_shape()) w.u32(static_cast<std::uint32_t>(d));
  w.u32(static_cast<std::uint32_t>(net.layer_count()));
  for (const Layer& L : net.layers()) {
    w.u32(static_cast<std::uint32_t>(L.kind));
    w.u32(static_cast<std::uint32_t>(L.in_dim));
    w.u32(static_cast<std::uint32_t>(L.out_dim));
    w.f64(L.drop_rate);
  }
  w.u64(net.param_count());
  for (double v : net.params()) w.f64(v);

  if (fisher) {
    check_same_length(fisher->size(), net.param_count(), "encode_model (fisher)");
    io::Writer s;
    for (double v : fisher->values) s.f64(v);
    w.section("FISH", s);
  }
  if (const auto& mask = net.mask()) {
    io::Writer s;
    s.u64(mask->scope.size());
    io::write_ascending(s, mask->scope);
    io::BitPacker bp(s);
    for (auto k : mask->keep) bp.put(k ? 1 : 0, 1);
    bp.finish();
    w.section("MASK", s);
  }
  if (quantized) {
    validate_coverage(quantized->plan, net.param_count(), net.mask() ? &*net.mask() : nullptr);
    io::Writer s;
    io::write_plan(s, *quantized);
    w.section("QUNT", s);
  }
  return w.data();
}

inline ModelFile decode_model(const std::vector<std::uint8_t>& bytes,
                              const std::string& context = "model") {
  io::Reader r(bytes.data(), bytes.size(), context);
  const std::uint8_t* magic = r.take(4, "magic");
  if (std::memcmp(magic, kModelMagic, 4) != 0) throw Error(context, "bad magic (expected FPRN)");
  const std::uint32_t version = r.u32("version");
  if (version != kModelVersion)
    throw Error(context, "unsupported format version " + std::to_string(version));
  const std::uint32_t rank = r.u32("input rank");
  if (rank == 0 || rank > 8) throw Error(context, "implausible input rank");
  Shape input;
  for (std::uint32_t i = 0; i < rank; ++i) input.push_back(r.u32("input dim"));
  const std::uint32_t nlayers = r.u32("layer count");
  if (nlayers == 0 || nlayers > 1024) throw Error(context, "implausible layer count");
  std::vector<Layer> layers;
  for (std::uint32_t l = 0; l < nlayers; ++l) {
    const std::uint32_t kind = r.u32("layer kind");
    if (kind > static_cast<std::uint32_t>(LayerKind::Softmax))
      throw Error(context, "unknown layer kind " + std::to_string(kind));
    Layer L;
    L.kind = static_cast<LayerKind>(kind);
    L.in_dim = r.u32("layer in");
    L.out_dim = r.u32("layer out");
    L.drop_rate = r.f64("drop rate");
    layers.push_back(L);
  }
  ModelFile mf;
  mf.net = Network(std::move(input), std::move(layers));
  const std::uint64_t count = r.u64("param count");
  if (count != mf.net.param_count())
    throw Error(context, "param count " + std::to_string(count) + " does not match layers (" +
                             std::to_string(mf.net.param_count()) + ")");
  for (double& v : mf.net.params()) v = r.f64("params");

  int last_order = -1;
  while (!r.done()) {
    const std::uint8_t* t = r.take(4, "section tag");
    const std::string tag(reinterpret_cast<const char*>(t), 4);
    const std::uint64_t len = r.u64("section length");
    if (len > r.remaining()) throw Error(context, "truncated " + tag + " section");
    io::Reader s(r.take(static_cast<std::size_t>(len), "section"), static_cast<std::size_t>(len),
                 context + " [" + tag + "]");
    int order;
    if (tag == "FISH") {
      order = 0;
      FisherEstimate f{Vector(mf.net.param_count())};
      for (double& v : f.values) v = s.f64("fisher values");
      mf.fisher = std::move(f);
    } else if (tag == "MASK") {
      order = 1;
      const std::uint64_t nscope = s.u64("scope count");
      PruneMask m;
      m.scope = io::read_ascending(s, nscope, mf.net.param_count(), "mask scope");
      io::BitUnpacker bu(s);
      m.keep.resize(mf.net.param_count());
      for (auto& k : m.keep) k = static_cast<std::uint8_t>(bu.get(1, "keep flags"));
      mf.net.set_mask(m);
    } else if (tag == "QUNT") {
      order = 2;
      mf.quantized = io::read_plan(s, mf.net.param_count());
    } else {
      throw Error(context, "unknown section '" + tag + "'");
    }
    if (order <= last_order) throw Error(context, "section " + tag + " repeated or out of order");
    last_order = order;
    if (!s.done()) throw Error(s.context(), "trailing bytes in section");
  }

  if (mf.quantized) {
    const auto& q = *mf.quantized;
    validate_coverage(q.plan, mf.net.param_count(), mf.net.mask() ? &*mf.net.mask() : nullptr);
    for (std::size_t gi = 0; gi < q.plan.groups.size(); ++gi) {
      const auto& g = q.plan.groups[gi];
      for (std::size_t k = 0; k < g.members.size(); ++k)
        if (std::bit_cast<std::uint64_t>(g.codebook.level(q.codes[gi][k])) !=
            std::bit_cast<std::uint64_t>(mf.net.params()[g.members[k]]))
          throw Error(context, "quantized payload disagrees with stored parameter " +
                                   std::to_string(g.members[k]));
    }
  }
  return mf;
}

inline void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(path, "cannot open for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw Error(path, "write failed");
}

inline std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(path, "cannot open");
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

inline void save_model(const std::string& path, const Network& net,
                       const FisherEstimate* fisher = nullptr,
                       const QuantizedSection* quantized = nullptr) {
  write_file(path, encode_model(net, fisher, quantized));
}

inline ModelFile load_model(const std::string& path) { return decode_model(read_file(path), path); }

}  // namespace fisherprune

#endif  // FISHERPRUNE_SERIALIZE_HPP_
