#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>

namespace fbflow {

// SplitMix64: tiny 64-bit generator used only to expand seeds.
class SplitMix64 {
 public:
  explicit constexpr SplitMix64(std::uint64_t state) : state_(state) {}
  constexpr std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

// Stateless scrambler (the SplitMix64 finalizer), used to spread stream ids
// before they touch a seed.
constexpr std::uint64_t scramble64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// xoshiro256++ (Blackman & Vigna), seeded through SplitMix64.  The
// (seed, stream) constructor gives counter-based streams: reconstructing a
// generator from the same pair replays the same draws, and distinct streams
// are decorrelated by scrambling, so per-path results do not depend on any
// execution order.
class Xoshiro256pp {
 public:
  explicit Xoshiro256pp(std::uint64_t seed, std::uint64_t stream = 0) {
    SplitMix64 sm(seed ^ scramble64(stream * 0x9e3779b97f4a7c15ULL + 1));
    for (auto& word : s_) word = sm.next();
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
  }

  std::uint64_t next() {
    const std::uint64_t result = std::rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = std::rotl(s_[3], 45);
    return result;
  }

  // Uniform double in [0, 1), 53 significant bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::array<std::uint64_t, 4> s_;
};

// Standard normals by the polar (Marsaglia) method; keeps the spare draw.
class NormalSampler {
 public:
  explicit NormalSampler(Xoshiro256pp& gen) : gen_(&gen) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double x, y, s;
    do {
      x = 2.0 * gen_->uniform() - 1.0;
      y = 2.0 * gen_->uniform() - 1.0;
      s = x * x + y * y;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = y * m;
    have_spare_ = true;
    return x * m;
  }

 private:
  Xoshiro256pp* gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace fbflow
