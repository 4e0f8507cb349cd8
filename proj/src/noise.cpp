#include "mflab/noise.hpp"

#include <cmath>
#include <stdexcept>

namespace mflab {

namespace {

constexpr std::uint32_t kPhiloxW32A = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW32B = 0xBB67AE85u;
constexpr std::uint32_t kPhiloxM4x32A = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM4x32B = 0xCD9E8D57u;

inline void mul_hilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                     std::uint32_t& lo) {
  std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

inline double u53(std::uint32_t hi, std::uint32_t lo) {
  std::uint64_t u = (static_cast<std::uint64_t>(hi) << 32) | lo;
  return static_cast<double>((u >> 11) + 1) * 0x1.0p-53;  // in (0, 1]
}

// Counter block index reserved for standard_normal so it never collides with
// brownian_increment blocks (which start at 0) of the same stream.
constexpr std::uint32_t kNormalBlockBase = 0x80000000u;

constexpr double kTwoPi = 6.283185307179586476925286766559;

}  // namespace

void philox4x32_10(const std::uint32_t ctr[4], std::uint32_t k0, std::uint32_t k1,
                   std::uint32_t out[4]) {
  std::uint32_t c0 = ctr[0], c1 = ctr[1], c2 = ctr[2], c3 = ctr[3];
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mul_hilo(kPhiloxM4x32A, c0, hi0, lo0);
    mul_hilo(kPhiloxM4x32B, c2, hi1, lo1);
    std::uint32_t n0 = hi1 ^ c1 ^ k0;
    std::uint32_t n1 = lo1;
    std::uint32_t n2 = hi0 ^ c3 ^ k1;
    std::uint32_t n3 = lo0;
    c0 = n0;
    c1 = n1;
    c2 = n2;
    c3 = n3;
    k0 += kPhiloxW32A;
    k1 += kPhiloxW32B;
  }
  out[0] = c0;
  out[1] = c1;
  out[2] = c2;
  out[3] = c3;
}

void gaussian_pair(std::uint64_t seed, std::uint64_t stream_id, std::uint32_t step,
                   std::uint32_t block, double out[2]) {
  std::uint32_t ctr[4] = {static_cast<std::uint32_t>(stream_id),
                          static_cast<std::uint32_t>(stream_id >> 32), step, block};
  std::uint32_t r[4];
  philox4x32_10(ctr, static_cast<std::uint32_t>(seed),
                static_cast<std::uint32_t>(seed >> 32), r);
  double u1 = u53(r[0], r[1]);
  double u2 = u53(r[2], r[3]);
  double rad = std::sqrt(-2.0 * std::log(u1));
  out[0] = rad * std::cos(kTwoPi * u2);
  out[1] = rad * std::sin(kTwoPi * u2);
}

void brownian_increment(std::uint64_t seed, std::uint64_t stream_id,
                        std::int64_t step, double dt, int n, double* out) {
  if (n < 0 || step < 0 || step > 0x7FFFFFFDLL)
    throw std::invalid_argument("brownian_increment: bad step or dimension");
  if (!(dt > 0.0)) throw std::invalid_argument("brownian_increment: dt must be > 0");
  double root = std::sqrt(dt);
  double z[2];
  int blocks = (n + 1) / 2;
  for (int b = 0; b < blocks; ++b) {
    gaussian_pair(seed, stream_id, static_cast<std::uint32_t>(step),
                  static_cast<std::uint32_t>(b), z);
    out[2 * b] = root * z[0];
    if (2 * b + 1 < n) out[2 * b + 1] = root * z[1];
  }
}

std::vector<double> brownian_increment(std::uint64_t seed, std::uint64_t stream_id,
                                       std::int64_t step, double dt, int n) {
  std::vector<double> out(static_cast<size_t>(n));
  brownian_increment(seed, stream_id, step, dt, n, out.data());
  return out;
}

void standard_normal(std::uint64_t seed, std::uint64_t stream_id, int count,
                     double* out) {
  double z[2];
  int blocks = (count + 1) / 2;
  for (int b = 0; b < blocks; ++b) {
    gaussian_pair(seed, stream_id, 0,
                  kNormalBlockBase + static_cast<std::uint32_t>(b), z);
    out[2 * b] = z[0];
    if (2 * b + 1 < count) out[2 * b + 1] = z[1];
  }
}

double uniform01(std::uint64_t seed, std::uint64_t stream_id, std::uint32_t step,
                 std::uint32_t block) {
  std::uint32_t ctr[4] = {static_cast<std::uint32_t>(stream_id),
                          static_cast<std::uint32_t>(stream_id >> 32), step, block};
  std::uint32_t r[4];
  philox4x32_10(ctr, static_cast<std::uint32_t>(seed),
                static_cast<std::uint32_t>(seed >> 32), r);
  std::uint64_t u = (static_cast<std::uint64_t>(r[0]) << 32) | r[1];
  return (static_cast<double>(u >> 11) + 0.5) * 0x1.0p-53;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view tag) {
  std::uint64_t h = splitmix64(base ^ 0xA5A5A5A55A5A5A5Aull);
  for (unsigned char ch : tag) h = splitmix64(h ^ ch);
  return h;
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t a) {
  return splitmix64(derive_seed(base, tag) ^ a);
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t a,
                          std::uint64_t b) {
  return splitmix64(derive_seed(base, tag, a) ^ b);
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t a,
                          std::uint64_t b, std::uint64_t c) {
  return splitmix64(derive_seed(base, tag, a, b) ^ c);
}

}
