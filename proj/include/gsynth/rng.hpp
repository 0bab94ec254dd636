#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

#include "gsynth/types.hpp"

namespace gsynth {

// Counter-based generator: every draw is a pure function of (key, counter), so
// streams keyed by (seed, step, purpose) reproduce identically regardless of
// thread layout or call interleaving elsewhere.
class Rng {
 public:
  explicit Rng(std::initializer_list<std::uint64_t> key_words) {
    for (std::uint64_t w : key_words) key_ = mix(key_ ^ (w + 0x9e3779b97f4a7c15ull));
  }

  std::uint64_t next_u64() { return mix(key_ + (++ctr_) * 0x9e3779b97f4a7c15ull); }

  /// Uniform double in [0, 1).
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform double in (0, 1]; safe as a log() argument.
  double uniform_pos() { return double((next_u64() >> 11) + 1) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n) { return next_u64() % n; }

  /// Standard normal via Box-Muller (explicit formula keeps draws portable).
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform_pos()));
    const double a = 2.0 * M_PI * uniform();
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  VecX normal_vec(int n) {
    VecX v(n);
    for (int i = 0; i < n; ++i) v(i) = normal();
    return v;
  }

  Vec3 normal_vec3() {
    return Vec3(normal(), normal(), normal());
  }

  /// Uniform direction on S^2.
  Vec3 unit_vec3() {
    Vec3 v;
    do {
      v = normal_vec3();
    } while (v.norm() < 1e-12);
    return v.normalized();
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30; z *= 0xbf58476d1ce4e5b9ull;
    z ^= z >> 27; z *= 0x94d049bb133111ebull;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t key_ = 0x853c49e6748fea9bull;
  std::uint64_t ctr_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace gsynth
