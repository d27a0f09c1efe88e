// Copyright 2026 The predbranch Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>

namespace predbranch {

/// Worker count: hardware concurrency, capped by PREDBRANCH_THREADS when set.
std::size_t worker_count();

/// Runs body(i) for i in [0, n). Each index must write only its own output
/// slot; results are then independent of the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace predbranch
