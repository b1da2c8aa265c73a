#pragma once

// Counter-based normal variates. Every Gaussian is a pure function of
// (seed, stream, replica, index), so replicas can be generated in any order
// on any number of threads with identical results.

#include <array>
#include <cmath>
#include <cstdint>

namespace mfh {

/// Philox4x32-10 (Salmon et al. 2011).
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t kM0 = 0xD2511F53u, kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u, kW1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
    ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
    key[0] += kW0;
    key[1] += kW1;
  }
  return ctr;
}

/// Stream tags keep the different consumers of one seed apart.
enum class Stream : std::uint32_t {
  Driver = 1,
  FarDriver = 2,
  Spectral = 3,
  Oracle = 4,
  Misc = 5,
};

class NormalStream {
 public:
  NormalStream(std::uint64_t seed, Stream stream, std::uint64_t replica)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_(static_cast<std::uint32_t>(stream)),
        replica_(replica) {}

  /// Two independent standard normals for counter `index`.
  std::array<double, 2> pair(std::uint64_t index) const {
    const auto r = philox4x32({static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                               static_cast<std::uint32_t>(replica_),
                               static_cast<std::uint32_t>(replica_ >> 32) ^ (stream_ << 24)},
                              key_);
    // 53-bit uniforms in (0, 1]
    const std::uint64_t a = (static_cast<std::uint64_t>(r[0]) << 21) ^ (r[1] >> 11);
    const std::uint64_t b = (static_cast<std::uint64_t>(r[2]) << 21) ^ (r[3] >> 11);
    const double u1 = (static_cast<double>(a) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(b) * 0x1.0p-53;
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double ang = 2.0 * 3.14159265358979323846 * u2;
    return {rad * std::cos(ang), rad * std::sin(ang)};
  }

  /// The i-th normal of the stream.
  double normal(std::uint64_t i) const { return pair(i >> 1)[i & 1]; }

  /// Uniform in [0, 1) for counter `index`.
  double uniform(std::uint64_t index) const {
    const auto r = philox4x32({static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                               static_cast<std::uint32_t>(replica_),
                               static_cast<std::uint32_t>(replica_ >> 32) ^ (stream_ << 24) ^ 0x800000u},
                              key_);
    const std::uint64_t a = (static_cast<std::uint64_t>(r[0]) << 21) ^ (r[1] >> 11);
    return static_cast<double>(a) * 0x1.0p-53;
  }

  /// out[i] = normal(offset + i); offset must be even.
  template <class Out>
  void fill(Out* out, std::size_t n, std::uint64_t offset = 0) const {
    for (std::size_t i = 0; i < n; i += 2) {
      const auto z = pair((offset + i) >> 1);
      out[i] = z[0];
      if (i + 1 < n) out[i + 1] = z[1];
    }
  }

 private:
  std::array<std::uint32_t, 2> key_;
  std::uint32_t stream_;
  std::uint64_t replica_;
};

}  // namespace mfh
