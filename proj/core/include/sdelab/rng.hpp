#pragma once

#include <cmath>
#include <cstdint>

// Counter-based random numbers (Philox4x32-10, Salmon et al. SC 2011).
// Every draw is a pure function of (seed, path, step), so path i sees the
// same noise no matter how paths are scheduled across workers.

namespace sdelab {

struct Philox4x32 {
  std::uint32_t v[4];
};

namespace detail {

inline void philox_round(std::uint32_t counter[4], const std::uint32_t key[2]) {
  constexpr std::uint32_t kM0 = 0xD2511F53u;
  constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * counter[0];
  const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * counter[2];
  const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
  const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
  const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
  const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
  counter[0] = hi1 ^ counter[1] ^ key[0];
  counter[1] = lo1;
  counter[2] = hi0 ^ counter[3] ^ key[1];
  counter[3] = lo0;
}

}  // namespace detail

inline Philox4x32 philox(std::uint64_t seed, std::uint64_t ctr_hi,
                         std::uint64_t ctr_lo) {
  constexpr std::uint32_t kW0 = 0x9E3779B9u;
  constexpr std::uint32_t kW1 = 0xBB67AE85u;
  std::uint32_t counter[4] = {
      static_cast<std::uint32_t>(ctr_lo), static_cast<std::uint32_t>(ctr_lo >> 32),
      static_cast<std::uint32_t>(ctr_hi), static_cast<std::uint32_t>(ctr_hi >> 32)};
  std::uint32_t key[2] = {static_cast<std::uint32_t>(seed),
                          static_cast<std::uint32_t>(seed >> 32)};
  for (int round = 0; round < 10; ++round) {
    detail::philox_round(counter, key);
    key[0] += kW0;
    key[1] += kW1;
  }
  return Philox4x32{{counter[0], counter[1], counter[2], counter[3]}};
}

// Uniform in (0, 1]: safe as the log argument in Box-Muller.
inline double u01_open(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 1.0) * 0x1p-53;
}

// Uniform in [0, 1).
inline double u01(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1p-53;
}

// One standard normal per (seed, path, step) counter. The Box-Muller pair's
// second member is discarded; determinism is worth more than the extra cosine.
inline double normal_draw(std::uint64_t seed, std::uint64_t path,
                          std::uint64_t step) {
  const Philox4x32 r = philox(seed, path, step);
  const std::uint64_t a =
      (static_cast<std::uint64_t>(r.v[0]) << 32) | r.v[1];
  const std::uint64_t b =
      (static_cast<std::uint64_t>(r.v[2]) << 32) | r.v[3];
  const double radius = std::sqrt(-2.0 * std::log(u01_open(a)));
  return radius * std::cos(6.283185307179586476925286766559 * u01(b));
}

// Uniform draw for bootstrap-style resampling, same keying scheme.
inline double uniform_draw(std::uint64_t seed, std::uint64_t path,
                           std::uint64_t step) {
  const Philox4x32 r = philox(seed, path, step);
  const std::uint64_t a =
      (static_cast<std::uint64_t>(r.v[0]) << 32) | r.v[1];
  return u01(a);
}

}  // namespace sdelab
