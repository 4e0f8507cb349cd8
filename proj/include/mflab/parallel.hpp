#pragma once

#include <cstdint>
#include <functional>

namespace mflab {

// Worker count resolution order: programmatic override, MFLAB_WORKERS env
// var, hardware concurrency. Always >= 1.
int worker_count();

// Override the worker count for this process; pass 0 to fall back to the
// environment / hardware default.
void set_worker_count(int n);

// Runs body(i) for i in [0, n). Work is partitioned into contiguous index
// blocks, one per worker. Results must be written to caller-owned slots
// indexed by i; with that discipline the output is identical for every
// worker count, including 1.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& body);

}
