#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace ddsde::rng {

// Philox4x64-10 counter-based generator. Known-answer vectors live in
// tests/data/philox4x64_kat.txt.
namespace detail {

inline constexpr std::uint64_t mul0 = 0xD2E7470EE14C6C93ull;
inline constexpr std::uint64_t mul1 = 0xCA5A826395121157ull;
inline constexpr std::uint64_t weyl0 = 0x9E3779B97F4A7C15ull;
inline constexpr std::uint64_t weyl1 = 0xBB67AE8584CAA73Bull;

inline void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi,
                    std::uint64_t& lo) {
  __uint128_t p = static_cast<__uint128_t>(a) * b;
  hi = static_cast<std::uint64_t>(p >> 64);
  lo = static_cast<std::uint64_t>(p);
}

inline std::array<std::uint64_t, 4> round_once(
    const std::array<std::uint64_t, 4>& c, const std::array<std::uint64_t, 2>& k) {
  std::uint64_t hi0, lo0, hi1, lo1;
  mulhilo(mul0, c[0], hi0, lo0);
  mulhilo(mul1, c[2], hi1, lo1);
  return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

}  // namespace detail

inline std::array<std::uint64_t, 4> philox4x64(std::array<std::uint64_t, 4> ctr,
                                               std::array<std::uint64_t, 2> key) {
  ctr = detail::round_once(ctr, key);
  for (int r = 1; r < 10; ++r) {
    key[0] += detail::weyl0;
    key[1] += detail::weyl1;
    ctr = detail::round_once(ctr, key);
  }
  return ctr;
}

// [0, 1) with a full 53-bit mantissa.
inline double to_unit(std::uint64_t x) {
  return static_cast<double>(x >> 11) * 0x1.0p-53;
}

// Four N(0,1) draws from one block via Box-Muller. The 1-u flip keeps the
// log argument in (0, 1].
inline std::array<double, 4> normal4(const std::array<std::uint64_t, 4>& w) {
  std::array<double, 4> z;
  for (int p = 0; p < 2; ++p) {
    double u1 = 1.0 - to_unit(w[2 * p]);
    double u2 = to_unit(w[2 * p + 1]);
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * std::numbers::pi * u2;
    z[2 * p] = r * std::cos(a);
    z[2 * p + 1] = r * std::sin(a);
  }
  return z;
}

// Draw purposes keep counter spaces of unrelated uses disjoint.
enum class purpose : std::uint64_t {
  init_component = 0,  // initial-condition component / cell choice
  init_normal = 1,     // initial-condition Gaussian draws
  increment = 2,       // Brownian increments, major index = step
  sweep = 3,           // validation / quasi-random sweeps
};

// One stream per particle (or per sweep): key = {seed, stream id},
// counter = {purpose, major, minor, 0}.
struct Stream {
  std::uint64_t seed = 0;
  std::uint64_t id = 0;

  std::array<std::uint64_t, 4> raw(purpose p, std::uint64_t major,
                                   std::uint64_t minor = 0) const {
    return philox4x64({static_cast<std::uint64_t>(p), major, minor, 0},
                      {seed, id});
  }

  std::array<double, 4> uniforms(purpose p, std::uint64_t major,
                                 std::uint64_t minor = 0) const {
    auto w = raw(p, major, minor);
    return {to_unit(w[0]), to_unit(w[1]), to_unit(w[2]), to_unit(w[3])};
  }

  std::array<double, 4> normals(purpose p, std::uint64_t major,
                                std::uint64_t minor = 0) const {
    return normal4(raw(p, major, minor));
  }
};

}  // namespace ddsde::rng
