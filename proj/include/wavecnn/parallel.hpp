// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>

namespace wavecnn {

/// Worker count: WAVECNN_THREADS if set and positive, else hardware concurrency.
std::size_t worker_threads();

/// Runs body(begin, end) over a static partition of [0, n). Partition
/// boundaries depend on the worker count, so callers must keep every output
/// element's reduction order independent of the partition.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace wavecnn
