// Copyright 2026 The predbranch Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace predbranch {

/// Sub-seed for a named consumer of randomness: a fixed hash of the label
/// mixed into the master seed.
std::uint64_t derive_seed(std::uint64_t master, std::string_view label);

/// mt19937_64 with distribution code kept in-tree: the standard
/// distributions are implementation-defined, and generated datasets must
/// be identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  /// Uniform in [0, n), unbiased.
  std::size_t uniform_index(std::size_t n);
  /// Standard normal via Box–Muller.
  double normal();

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[uniform_index(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace predbranch
