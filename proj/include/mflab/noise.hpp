#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace mflab {

// Counter-based Gaussian noise built on Philox4x32-10. Every draw is a pure
// function of (seed, stream_id, step, block): no generator state is carried
// between calls, so any step of any stream can be produced independently and
// in any order. Streams are used one per particle / copy / sample; coupling
// two systems means handing them the same (seed, stream_id) pairs.

// One 128-bit Philox block keyed by seed. Exposed for tests.
void philox4x32_10(const std::uint32_t ctr[4], std::uint32_t k0, std::uint32_t k1,
                   std::uint32_t out[4]);

// Two independent N(0,1) values for counter (stream_id, step, block).
void gaussian_pair(std::uint64_t seed, std::uint64_t stream_id, std::uint32_t step,
                   std::uint32_t block, double out[2]);

// n-dimensional Brownian increment over a step of length dt: i.i.d. N(0, dt)
// coordinates, written to out[0..n). Coordinates 2b and 2b+1 come from
// counter block b.
void brownian_increment(std::uint64_t seed, std::uint64_t stream_id,
                        std::int64_t step, double dt, int n, double* out);
std::vector<double> brownian_increment(std::uint64_t seed, std::uint64_t stream_id,
                                       std::int64_t step, double dt, int n);

// count i.i.d. N(0,1) values; lives in a counter region disjoint from the
// Brownian steps of the same (seed, stream_id).
void standard_normal(std::uint64_t seed, std::uint64_t stream_id, int count,
                     double* out);

// Uniform draw in (0,1) at an explicit counter position.
double uniform01(std::uint64_t seed, std::uint64_t stream_id, std::uint32_t step,
                 std::uint32_t block);

// Deterministic seed derivation for sub-experiments, replications and roles.
// splitmix64 chained over the tag bytes and the extra words.
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag);
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t a);
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t a,
                          std::uint64_t b);
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t a,
                          std::uint64_t b, std::uint64_t c);

}
