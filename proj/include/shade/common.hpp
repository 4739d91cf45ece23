// Copyright 2026 The shade Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace shade {

// All randomized components draw from std::mt19937_64 through the helpers
// below instead of <random> distributions, whose algorithms are
// implementation-defined. This keeps artifacts byte-stable across toolchains.
using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent seed stream for a (base, salt) pair, e.g. per tree node or
// per k-means restart.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) {
  return splitmix64(base ^ splitmix64(salt));
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt_a,
                                 std::uint64_t salt_b) {
  return derive_seed(derive_seed(base, salt_a), salt_b);
}

// Uniform double in [0, 1) with 53 random bits.
inline double rng_u01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n). Modulo bias is irrelevant at the sizes used
// here; determinism is what matters.
inline std::uint64_t rng_below(Rng& rng, std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("rng_below: n must be positive");
  return rng() % n;
}

// In-place Fisher-Yates with our own index draws (std::shuffle is
// implementation-defined).
template <typename T>
void rng_shuffle(std::vector<T>& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng_below(rng, i));
    std::swap(items[i - 1], items[j]);
  }
}

inline double rng_normal(Rng& rng) {
  // Box-Muller; the second variate is discarded to keep the stream simple.
  double u1 = rng_u01(rng);
  double u2 = rng_u01(rng);
  while (u1 <= 0.0) u1 = rng_u01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

// Marsaglia-Tsang gamma sampler.
inline double rng_gamma(Rng& rng, double shape) {
  if (shape <= 0.0) throw std::invalid_argument("rng_gamma: shape must be positive");
  if (shape < 1.0) {
    double u = rng_u01(rng);
    while (u <= 0.0) u = rng_u01(rng);
    return rng_gamma(rng, shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = rng_normal(rng);
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    double u = rng_u01(rng);
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

// FNV-1a over bytes, with an optional seed folded in. Used for feature
// hashing and artifact fingerprints.
inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ splitmix64(seed);
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace shade
