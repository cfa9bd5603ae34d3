#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "textpref/error.hpp"

namespace textpref {

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x00000100000001b3ULL;

/// FNV-1a over a byte string, optionally continuing a previous hash.
constexpr std::uint64_t fnv1a64(std::string_view bytes,
                                std::uint64_t h = kFnvOffset) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

/// SplitMix64 finalizer. Good avalanche, bit-identical everywhere.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Stable sub-seed for (seed, tag). Every stage and every record derives its
/// own stream this way, so adding or removing one record never perturbs the
/// randomness used for another.
constexpr std::uint64_t sub_seed(std::uint64_t seed, std::string_view tag) {
  std::uint64_t h = kFnvOffset;
  for (int i = 0; i < 8; ++i) {
    h ^= (seed >> (8 * i)) & 0xff;
    h *= kFnvPrime;
  }
  h ^= 0x1f;  // separator so ("ab","c") and ("a","bc") cannot collide
  h *= kFnvPrime;
  return mix64(fnv1a64(tag, h));
}

/// SplitMix64 generator. Used instead of <random> engines/distributions
/// because the standard distributions are not bit-portable across
/// implementations, and this pipeline promises byte-identical reruns.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Unbiased integer in [0, bound), bound > 0. Rejection sampling.
  std::uint64_t below(std::uint64_t bound) {
    if (bound == 0) throw Error("Rng::below: bound must be positive");
    const std::uint64_t threshold = (0 - bound) % bound;  // 2^64 mod bound
    for (;;) {
      const std::uint64_t r = next();
      if (r >= threshold) return r % bound;
    }
  }

  /// Integer in [lo, hi], inclusive.
  std::int64_t range(std::int64_t lo, std::int64_t hi) {
    if (lo > hi) throw Error("Rng::range: lo > hi");
    return lo + static_cast<std::int64_t>(
                    below(static_cast<std::uint64_t>(hi - lo) + 1));
  }

  /// Uniform double in [0, 1).
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

/// In-place Fisher-Yates shuffle.
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = rng.below(i);
    std::swap(v[i - 1], v[j]);
  }
}

/// k distinct indices from [0, n), in selection order.
inline std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k,
                                               Rng& rng) {
  if (k > n) throw Error("sample_indices: k > n");
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng.below(n - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  return idx;
}

/// Uniform random derangement of [0, k): perm[i] != i for all i.
/// Rejection over uniform permutations; acceptance rate tends to 1/e.
inline std::vector<std::size_t> random_derangement(std::size_t k, Rng& rng) {
  if (k < 2) throw Error("random_derangement: needs k >= 2");
  std::vector<std::size_t> perm(k);
  for (;;) {
    for (std::size_t i = 0; i < k; ++i) perm[i] = i;
    shuffle(perm, rng);
    bool fixed = false;
    for (std::size_t i = 0; i < k; ++i) {
      if (perm[i] == i) {
        fixed = true;
        break;
      }
    }
    if (!fixed) return perm;
  }
}

}  // namespace textpref
