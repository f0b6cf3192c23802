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

#ifndef FISHERPRUNE_DATA_HPP_
#define FISHERPRUNE_DATA_HPP_

#include <zlib.h>

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "fisherprune/common.hpp"
#include "fisherprune/network.hpp"
#include "fisherprune/tensor.hpp"

namespace fisherprune {

enum class Split { Train, Test };

struct Dataset {
  Tensor images;                      // [n, 1, 28, 28] for MNIST, [n, d] synthetic
  std::vector<std::uint32_t> labels;
  Split split = Split::Train;

  std::size_t size() const noexcept { return labels.size(); }

  std::uint32_t classes() const {
    return labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  }

  /// The first n examples.
  Dataset head(std::size_t n) const {
    n = std::min(n, size());
    return Dataset{images.slice_rows(0, n), {labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n)}, split};
  }

  Batch gather(std::span<const std::size_t> idx) const {
    Batch b{images.gather_rows(idx), {}};
    b.labels.reserve(idx.size());
    for (std::size_t i : idx) b.labels.push_back(labels[i]);
    return b;
  }
};

inline constexpr std::uint32_t kIdxImagesMagic = 2051;
inline constexpr std::uint32_t kIdxLabelsMagic = 2049;

namespace detail {

/// Whole-file read; zlib's gz reader passes uncompressed files through.
inline std::vector<std::uint8_t> read_maybe_gzip(const std::string& path) {
  gzFile f = gzopen(path.c_str(), "rb");
  if (!f) throw Error(path, "cannot open");
  std::vector<std::uint8_t> out;
  std::uint8_t buf[1 << 16];
  for (;;) {
    const int got = gzread(f, buf, sizeof buf);
    if (got < 0) {
      gzclose(f);
      throw Error(path, "read error");
    }
    if (got == 0) break;
    out.insert(out.end(), buf, buf + got);
  }
  gzclose(f);
  return out;
}

inline void write_maybe_gzip(const std::string& path, const std::vector<std::uint8_t>& bytes,
                             bool gzip) {
  gzFile f = gzopen(path.c_str(), gzip ? "wb9" : "wbT");
  if (!f) throw Error(path, "cannot open for writing");
  const bool ok = bytes.empty() ||
                  gzwrite(f, bytes.data(), static_cast<unsigned>(bytes.size())) ==
                      static_cast<int>(bytes.size());
  gzclose(f);
  if (!ok) throw Error(path, "write error");
}

inline std::uint32_t read_be32(const std::vector<std::uint8_t>& b, std::size_t at,
                               const std::string& path, const char* field) {
  if (at + 4 > b.size()) throw Error(path, std::string("truncated before ") + field);
  return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) |
         (std::uint32_t{b[at + 2]} << 8) | std::uint32_t{b[at + 3]};
}

inline void put_be32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) b.push_back(static_cast<std::uint8_t>(v >> s));
}

}  // namespace detail

struct IdxOptions {
  bool binarize = false;  // threshold scaled pixels at 0.5
};

/// Parses an IDX image/label pair (raw or gzipped). Pixels are scaled by
/// 1/255. Errors name the file and the field that failed.
inline Dataset load_idx(const std::string& images_path, const std::string& labels_path,
                        Split split = Split::Train, IdxOptions opt = {}) {
  const auto img = detail::read_maybe_gzip(images_path);
  const auto lab = detail::read_maybe_gzip(labels_path);

  const std::uint32_t img_magic = detail::read_be32(img, 0, images_path, "magic");
  if (img_magic != kIdxImagesMagic)
    throw Error(images_path, "bad magic " + std::to_string(img_magic) + " (expected 2051)");
  const std::uint32_t n = detail::read_be32(img, 4, images_path, "image count");
  const std::uint32_t rows = detail::read_be32(img, 8, images_path, "row count");
  const std::uint32_t cols = detail::read_be32(img, 12, images_path, "column count");
  if (n == 0 || rows == 0 || cols == 0) throw Error(images_path, "zero dimension");
  const std::size_t pixels = std::size_t{n} * rows * cols;
  if (img.size() < 16 + pixels) throw Error(images_path, "truncated pixel payload");
  if (img.size() > 16 + pixels) throw Error(images_path, "trailing bytes after pixel payload");

  const std::uint32_t lab_magic = detail::read_be32(lab, 0, labels_path, "magic");
  if (lab_magic != kIdxLabelsMagic)
    throw Error(labels_path, "bad magic " + std::to_string(lab_magic) + " (expected 2049)");
  const std::uint32_t nl = detail::read_be32(lab, 4, labels_path, "label count");
  if (nl != n)
    throw Error(labels_path, "label count " + std::to_string(nl) + " != image count " +
                                 std::to_string(n));
  if (lab.size() < 8 + std::size_t{nl}) throw Error(labels_path, "truncated label payload");
  if (lab.size() > 8 + std::size_t{nl}) throw Error(labels_path, "trailing bytes after labels");

  Dataset ds;
  ds.split = split;
  Vector px(pixels);
  for (std::size_t i = 0; i < pixels; ++i) {
    const double v = img[16 + i] / 255.0;
    px[i] = opt.binarize ? (v >= 0.5 ? 1.0 : 0.0) : v;
  }
  ds.images = Tensor({n, 1, rows, cols}, std::move(px));
  ds.labels.assign(lab.begin() + 8, lab.end());
  return ds;
}

/// Writes pixels (rounded back to bytes) and labels in IDX layout.
inline void write_idx(const Dataset& ds, const std::string& images_path,
                      const std::string& labels_path, bool gzip = false) {
  const Shape& s = ds.images.shape();
  std::uint32_t rows, cols;
  if (s.size() == 4 && s[1] == 1) {
    rows = static_cast<std::uint32_t>(s[2]);
    cols = static_cast<std::uint32_t>(s[3]);
  } else if (s.size() == 2) {
    rows = 1;
    cols = static_cast<std::uint32_t>(s[1]);
  } else {
    throw Error("write_idx", "unsupported image shape " + shape_string(s));
  }
  std::vector<std::uint8_t> img;
  img.reserve(16 + ds.images.size());
  detail::put_be32(img, kIdxImagesMagic);
  detail::put_be32(img, static_cast<std::uint32_t>(ds.size()));
  detail::put_be32(img, rows);
  detail::put_be32(img, cols);
  for (double v : ds.images.data())
    img.push_back(static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
  std::vector<std::uint8_t> lab;
  detail::put_be32(lab, kIdxLabelsMagic);
  detail::put_be32(lab, static_cast<std::uint32_t>(ds.size()));
  for (auto l : ds.labels) {
    if (l > 255) throw Error("write_idx", "label does not fit a byte");
    lab.push_back(static_cast<std::uint8_t>(l));
  }
  detail::write_maybe_gzip(images_path, img, gzip);
  detail::write_maybe_gzip(labels_path, lab, gzip);
}

/// One epoch of mini-batch index lists: a Fisher-Yates shuffle driven by
/// `rng`, the last batch possibly short.
inline std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n, std::size_t batch_size,
                                                           Rng& rng) {
  if (batch_size == 0) throw Error("batches", "batch_size must be >= 1");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t b = 0; b < n; b += batch_size)
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(b),
                     order.begin() + static_cast<std::ptrdiff_t>(std::min(n, b + batch_size)));
  return out;
}

/// Seeded batch stream over a dataset; epoch e reshuffles with a stream
/// derived from (seed, e).
class BatchStream {
 public:
  BatchStream(const Dataset& ds, std::size_t batch_size, std::uint64_t seed)
      : ds_(&ds), batch_size_(batch_size), seed_(seed) {
    if (batch_size == 0) throw Error("batches", "batch_size must be >= 1");
  }

  std::vector<std::vector<std::size_t>> epoch(std::uint64_t e) const {
    Rng rng(seed_ * 0x100000001B3ULL + e);
    return epoch_batches(ds_->size(), batch_size_, rng);
  }

  Batch batch(const std::vector<std::size_t>& idx) const { return ds_->gather(idx); }

 private:
  const Dataset* ds_;
  std::size_t batch_size_;
  std::uint64_t seed_;
};

/// Isotropic unit-variance Gaussian clusters. Class c's mean is a random
/// unit direction scaled by `separation` / 2, so distinct means sit about
/// `separation` apart. Means depend only on `seed`; the split selects an
/// independent sample stream, so train and test share class centers.
inline Dataset synthetic_blobs(std::uint64_t seed, std::size_t n_per_class, std::size_t classes,
                               std::size_t dim, double separation, Split split = Split::Train) {
  if (classes < 2) throw Error("synthetic_blobs", "need at least 2 classes");
  if (n_per_class == 0 || dim == 0) throw Error("synthetic_blobs", "empty dataset");
  Rng rng(seed);
  std::vector<Vector> means(classes, Vector(dim));
  for (auto& m : means) {
    double norm = 0.0;
    while (norm == 0.0) {
      for (double& v : m) v = rng.normal();
      norm = std::sqrt(std::inner_product(m.begin(), m.end(), m.begin(), 0.0));
    }
    for (double& v : m) v *= 0.5 * separation / norm;
  }
  if (classes == 2)
    for (std::size_t j = 0; j < dim; ++j) means[1][j] = -means[0][j];
  Rng draw(seed ^ (split == Split::Train ? 0x5851F42D4C957F2DULL : 0x14057B7EF767814FULL));
  const std::size_t n = n_per_class * classes;
  Vector x(n * dim);
  std::vector<std::uint32_t> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = i % classes;
    y[i] = static_cast<std::uint32_t>(c);
    for (std::size_t j = 0; j < dim; ++j) x[i * dim + j] = means[c][j] + draw.normal();
  }
  return Dataset{Tensor({n, dim}, std::move(x)), std::move(y), split};
}

}  // namespace fisherprune

#endif  // FISHERPRUNE_DATA_HPP_
