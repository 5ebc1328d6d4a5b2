#pragma once

// Counter-based pseudo-random generator (Philox 4x32, 10 rounds) plus the
// handful of distributions the simulation designs need.  A counter-based
// engine gives every (seed, stream) pair an independent, platform-stable
// sequence: the k-th draw is a pure function of (seed, stream, k), so
// replications can be split across workers without coordination and still
// reproduce bit-for-bit.

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace csis {

namespace detail {

// One Philox round: multiply-hi/lo mixing of the counter with the key.
inline void philox_round(std::array<std::uint32_t, 4>& ctr,
                         const std::array<std::uint32_t, 2>& key) {
  constexpr std::uint64_t M0 = 0xD2511F53u;
  constexpr std::uint64_t M1 = 0xCD9E8D57u;
  std::uint64_t p0 = M0 * ctr[0];
  std::uint64_t p1 = M1 * ctr[2];
  std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
  std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
  std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
  std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
  ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
}

}  // namespace detail

// Philox 4x32-10 block function: 128-bit counter, 64-bit key -> 128 bits.
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t W0 = 0x9E3779B9u;  // Weyl increments for the key
  constexpr std::uint32_t W1 = 0xBB67AE85u;
  for (int r = 0; r < 10; ++r) {
    if (r > 0) {
      key[0] += W0;
      key[1] += W1;
    }
    detail::philox_round(ctr, key);
  }
  return ctr;
}

// Derive an independent child seed from (master, k).  SplitMix64 finalizer:
// statistically decorrelated even for consecutive k, and stable across
// platforms.  Used for per-replication and per-permutation streams.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t k) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ull * (k + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
      : seed_(seed), stream_(stream) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  std::uint32_t next_u32() {
    if (idx_ == 4) {
      refill();
    }
    return buf_[idx_++];
  }

  std::uint64_t next_u64() {
    std::uint64_t lo = next_u32();
    std::uint64_t hi = next_u32();
    return (hi << 32) | lo;
  }

  // Uniform on the open interval (0,1): 53-bit mantissa, offset by half an ulp
  // so 0 and 1 are unreachable (safe for log() and quantile transforms).
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; the second value of each pair is cached.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  // Double exponential (Laplace) with location 0 and scale 1 (variance 2).
  double laplace() {
    double u = uniform() - 0.5;
    return (u < 0 ? 1.0 : -1.0) * std::log(1.0 - 2.0 * std::fabs(u));
  }

  // Equal mixture of N(-1,1) and N(1,0.5) where the second parameter is the
  // variance.  Raw mean 0, raw variance 0.5*(1+1) + 0.5*(0.5+1) = 1.75.
  double mixture_normal_raw() {
    if (uniform() < 0.5) {
      return -1.0 + gaussian();
    }
    return 1.0 + 0.70710678118654752440 * gaussian();  // sd = sqrt(0.5)
  }

  long poisson(double lambda) {
    if (!(lambda >= 0) || !std::isfinite(lambda)) {
      throw std::domain_error("poisson: lambda must be finite and >= 0");
    }
    if (lambda < 30.0) {
      // Knuth multiplication method.
      double limit = std::exp(-lambda);
      long k = 0;
      double prod = uniform();
      while (prod > limit) {
        ++k;
        prod *= uniform();
      }
      return k;
    }
    // Normal approximation with continuity correction; adequate for the
    // simulation designs (they clamp the linear predictor well below this).
    double draw = lambda + std::sqrt(lambda) * gaussian();
    return draw < 0 ? 0 : static_cast<long>(draw + 0.5);
  }

  // Unbiased integer on [0, n) by Lemire's multiply-shift rejection.
  std::uint64_t bounded(std::uint64_t n) {
    if (n == 0) {
      throw std::domain_error("bounded: n must be positive");
    }
    while (true) {
      std::uint64_t x = next_u64();
      unsigned __int128 m = static_cast<unsigned __int128>(x) * n;
      std::uint64_t lo = static_cast<std::uint64_t>(m);
      if (lo >= n || lo >= static_cast<std::uint64_t>(-n) % n) {
        return static_cast<std::uint64_t>(m >> 64);
      }
    }
  }

  // Fisher-Yates shuffle.
  template <typename It>
  void shuffle(It first, It last) {
    auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
      std::uint64_t j = bounded(i);
      std::swap(first[i - 1], first[j]);
    }
  }

 private:
  void refill() {
    std::array<std::uint32_t, 4> ctr = {
        static_cast<std::uint32_t>(block_),
        static_cast<std::uint32_t>(block_ >> 32),
        static_cast<std::uint32_t>(stream_),
        static_cast<std::uint32_t>(stream_ >> 32)};
    std::array<std::uint32_t, 2> key = {
        static_cast<std::uint32_t>(seed_),
        static_cast<std::uint32_t>(seed_ >> 32)};
    auto out = philox4x32(ctr, key);
    buf_[0] = out[0];
    buf_[1] = out[1];
    buf_[2] = out[2];
    buf_[3] = out[3];
    ++block_;
    idx_ = 0;
  }

  std::uint64_t seed_ = 0;
  std::uint64_t stream_ = 0;
  std::uint64_t block_ = 0;
  std::uint32_t buf_[4] = {0, 0, 0, 0};
  int idx_ = 4;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace csis
