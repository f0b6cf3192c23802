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

#ifndef FISHERPRUNE_MASK_HPP_
#define FISHERPRUNE_MASK_HPP_

#include <cstddef>
#include <cstdint>
#include <vector>

namespace fisherprune {

/// Keep/remove flags aligned to the flat parameter index. Entries outside
/// `scope` are always kept.
struct PruneMask {
  std::vector<std::uint8_t> keep;   // 1 = parameter survives
  std::vector<std::size_t> scope;   // ascending flat indices eligible for pruning

  static PruneMask all_kept(std::size_t n, std::vector<std::size_t> scope) {
    return PruneMask{std::vector<std::uint8_t>(n, 1), std::move(scope)};
  }

  std::size_t size() const noexcept { return keep.size(); }
  bool kept(std::size_t i) const { return keep[i] != 0; }

  std::size_t removed_count() const {
    std::size_t n = 0;
    for (auto k : keep) n += (k == 0);
    return n;
  }

  /// Surviving in-scope indices, ascending.
  std::vector<std::size_t> survivors() const {
    std::vector<std::size_t> out;
    out.reserve(scope.size());
    for (std::size_t i : scope)
      if (keep[i]) out.push_back(i);
    return out;
  }

  friend bool operator==(const PruneMask&, const PruneMask&) = default;
};

}  // namespace fisherprune

#endif  // FISHERPRUNE_MASK_HPP_
