#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace distbell {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Deterministic random stream. All randomness flows through this wrapper so
/// that every run is reproducible from a single root seed. Sub-streams are
/// derived by id (one per state-action pair, stream id = x * n_actions + a)
/// or by name (one per experiment cell), so adding a consumer does not
/// perturb the draws seen by the others.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(scramble(seed)) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  /// Uniform double in (0, 1]; suitable as a quantile argument.
  double uniform_open_closed() { return 1.0 - uniform(); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  int uniform_int(int n) {
    return static_cast<int>(gen_() % static_cast<std::uint64_t>(n));
  }

  static Rng child(std::uint64_t root, std::uint64_t stream_id) {
    std::uint64_t s = root + 0x9e3779b97f4a7c15ULL * (stream_id + 1);
    const std::uint64_t a = splitmix64(s);
    return Rng(a ^ splitmix64(s));
  }

  static Rng child(std::uint64_t root, std::string_view stream_name) {
    return child(root, fnv1a64(stream_name));
  }

 private:
  static std::uint64_t scramble(std::uint64_t seed) {
    std::uint64_t s = seed;
    return splitmix64(s);
  }

  std::mt19937_64 gen_;
};

}  // namespace distbell
