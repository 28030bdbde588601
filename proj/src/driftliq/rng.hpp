#ifndef DRIFTLIQ_RNG_HPP
#define DRIFTLIQ_RNG_HPP

#include <cmath>
#include <cstdint>

namespace driftliq {

// Counter-based stream: the state advances by a fixed increment and the
// output is a bijective hash of the counter (splitmix64). Streams for
// different (seed, path) pairs are decorrelated by hashing the pair into
// the initial counter, which makes path draws independent of how paths
// are distributed over threads.
class CounterRng {
public:
  CounterRng(std::uint64_t seed, std::uint64_t stream) {
    state_ = mix(seed + 0x9E3779B97F4A7C15ULL * (stream + 1));
    state_ = mix(state_ ^ 0xD1B54A32D192ED03ULL);
    have_spare_ = false;
    spare_ = 0.0;
  }

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix(state_);
  }

  // uniform on (0,1), never exactly 0 or 1
  double next_uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // standard normal via Box-Muller, caching the second draw
  double next_normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = next_uniform();
    const double u2 = next_uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
  bool have_spare_;
  double spare_;
};

}  // namespace driftliq

#endif
