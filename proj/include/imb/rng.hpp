#ifndef IMB_RNG_HPP
#define IMB_RNG_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>
#include <vector>

namespace imb {

/// SplitMix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
  return mix64(mix64(a) ^ b);
}

/// FNV-1a, for folding stream tags / policy names into seeds.
constexpr std::uint64_t hash_str(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Counter-based stream derivation: every (master, name, run, tag) tuple maps
/// to a seed independent of evaluation order, so work can be distributed over
/// workers without changing the results.
inline std::uint64_t seed_stream(std::uint64_t master, std::string_view name,
                                 std::uint64_t run, std::string_view tag) {
  std::uint64_t h = mix64(master, hash_str(tag));
  h = mix64(h, hash_str(name));
  return mix64(h, run);
}

/// Deterministic random source. All sampling goes through explicit helpers
/// (uniform bits, Box-Muller normals) instead of std distributions, so that a
/// seed reproduces the same byte-identical outputs on any platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Box-Muller without caching; consumes exactly two draws per call.
  double normal(double mean, double sigma) {
    double u1 = uniform01();
    double u2 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    double mag = std::sqrt(-2.0 * std::log(u1));
    return mean + sigma * mag * std::cos(6.283185307179586476925286766559 * u2);
  }

  /// Uniform integer in [lo, hi] inclusive (multiply-shift mapping).
  int uniform_int(int lo, int hi) {
    std::uint64_t range = static_cast<std::uint64_t>(hi - lo) + 1;
    std::uint64_t v = static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * range) >> 64);
    return lo + static_cast<int>(v);
  }

  /// Child stream derived from this stream's seed; does not consume state.
  Rng fork(std::uint64_t tag) const { return Rng(mix64(seed_, tag)); }

  /// k distinct values from {0,...,n-1}, partial Fisher-Yates, sorted output.
  std::vector<int> sample_distinct(int n, int k) {
    std::vector<int> pool(n);
    for (int i = 0; i < n; ++i) pool[i] = i;
    if (k > n) k = n;
    for (int i = 0; i < k; ++i) {
      int j = uniform_int(i, n - 1);
      std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    std::sort(pool.begin(), pool.end());
    return pool;
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace imb

#endif  // IMB_RNG_HPP
