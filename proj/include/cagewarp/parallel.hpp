// Copyright The cagewarp Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <stop_token>

namespace cagewarp {

/// Worker count: hardware concurrency, capped by CAGEWARP_THREADS when set.
unsigned worker_count();

/// Runs fn(i) for i in [0, count) across workers, handing out indices
/// dynamically. Stops handing out work once `stop` is requested. Returns
/// false if stopped early.
bool parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn,
                  std::stop_token stop = {});

}  // namespace cagewarp
