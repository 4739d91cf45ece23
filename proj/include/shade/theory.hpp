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
#include <stdexcept>
#include <vector>

#include <boost/math/special_functions/beta.hpp>

#include "shade/common.hpp"

namespace shade {

// Monte Carlo checks for the two order-statistics claims behind the model
// hierarchy and the multi-method generation step, under the independence
// assumptions their proofs use. The samplers are local code; the Beta CDF
// comes from Boost.Math, so empirical and closed-form routes stay
// independent.

enum class Distribution { uniform01, beta, point_mass };

struct SimSpec {
  Distribution dist = Distribution::uniform01;
  double beta_a = 1.0;    // used when dist == beta
  double beta_b = 1.0;
  double point = 0.5;     // used when dist == point_mass
  int m = 1;              // number of draws per trial
  double threshold = 0.5; // the p the maximum must exceed, in (0,1)
  long long trials = 100000;
  std::uint64_t seed = 1;
};

namespace detail {

inline void validate(const SimSpec& spec) {
  if (spec.m < 1) throw std::invalid_argument("simulation: m must be >= 1");
  if (spec.trials < 1) throw std::invalid_argument("simulation: trials must be >= 1");
  if (!(spec.threshold > 0.0 && spec.threshold < 1.0))
    throw std::invalid_argument("simulation: threshold must lie in (0,1)");
  if (spec.dist == Distribution::beta && (spec.beta_a <= 0.0 || spec.beta_b <= 0.0))
    throw std::invalid_argument("simulation: beta parameters must be positive");
  if (spec.dist == Distribution::point_mass && (spec.point < 0.0 || spec.point > 1.0))
    throw std::invalid_argument("simulation: point mass must lie in [0,1]");
}

inline double sample(const SimSpec& spec, Rng& rng) {
  switch (spec.dist) {
    case Distribution::uniform01:
      return rng_u01(rng);
    case Distribution::beta: {
      double g1 = rng_gamma(rng, spec.beta_a);
      double g2 = rng_gamma(rng, spec.beta_b);
      return g1 / (g1 + g2);
    }
    case Distribution::point_mass:
      return spec.point;
  }
  throw std::logic_error("unreachable");
}

inline double cdf(const SimSpec& spec, double x) {
  switch (spec.dist) {
    case Distribution::uniform01:
      return std::clamp(x, 0.0, 1.0);
    case Distribution::beta:
      if (x <= 0.0) return 0.0;
      if (x >= 1.0) return 1.0;
      return boost::math::ibeta(spec.beta_a, spec.beta_b, x);
    case Distribution::point_mass:
      return x >= spec.point ? 1.0 : 0.0;
  }
  throw std::logic_error("unreachable");
}

}  // namespace detail

struct MaxExceedsResult {
  double empirical = 0.0;
  double closed_form = 0.0;  // 1 - F(p)^m
};

/// Estimates Pr(max of m i.i.d. draws > p) and returns it next to the exact
/// 1 - F(p)^m for the chosen distribution.
inline MaxExceedsResult mc_max_exceeds(const SimSpec& spec) {
  detail::validate(spec);
  Rng rng(spec.seed);
  long long hits = 0;
  for (long long t = 0; t < spec.trials; ++t) {
    bool exceeded = false;
    for (int i = 0; i < spec.m; ++i) {
      if (detail::sample(spec, rng) > spec.threshold) exceeded = true;
    }
    if (exceeded) ++hits;
  }
  MaxExceedsResult out;
  out.empirical = static_cast<double>(hits) / static_cast<double>(spec.trials);
  out.closed_form = 1.0 - std::pow(detail::cdf(spec, spec.threshold), spec.m);
  return out;
}

struct CoverageResult {
  double empirical_coverage = 0.0;
  double closed_coverage = 0.0;   // 1 - prod(1 - p_i)
  double empirical_mu = 0.0;      // mean count of successes per trial
  double closed_mu = 0.0;         // sum p_i
};

/// Per trial, flips one independent coin per method; coverage is the
/// probability that at least one succeeds, mu the expected success count.
inline CoverageResult mc_similarity_coverage(const std::vector<double>& probs,
                                             long long trials, std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("simulation: trials must be >= 1");
  for (double p : probs)
    if (!(p >= 0.0 && p <= 1.0))
      throw std::invalid_argument("simulation: probabilities must lie in [0,1]");
  Rng rng(seed);
  long long covered = 0;
  long long successes = 0;
  for (long long t = 0; t < trials; ++t) {
    int count = 0;
    for (double p : probs)
      if (rng_u01(rng) < p) ++count;
    if (count > 0) ++covered;
    successes += count;
  }
  CoverageResult out;
  out.empirical_coverage = static_cast<double>(covered) / static_cast<double>(trials);
  out.empirical_mu = static_cast<double>(successes) / static_cast<double>(trials);
  double miss = 1.0;
  double mu = 0.0;
  for (double p : probs) {
    miss *= (1.0 - p);
    mu += p;
  }
  out.closed_coverage = 1.0 - miss;
  out.closed_mu = mu;
  return out;
}

struct BoundResult {
  double exact = 0.0;  // 1 - prod(1 - p_i)
  double bound = 0.0;  // 1 - (1 - p_min)^m
};

/// Any-success probability against its minimum-element lower bound. Both
/// sides are computed by repeated multiplication so the all-equal case is
/// an exact equality.
inline BoundResult bound_ps(const std::vector<double>& probs) {
  if (probs.empty()) throw std::invalid_argument("bound_ps: empty probability list");
  double p_min = 1.0;
  for (double p : probs) {
    if (!(p >= 0.0 && p <= 1.0))
      throw std::invalid_argument("bound_ps: probabilities must lie in [0,1]");
    p_min = std::min(p_min, p);
  }
  double miss = 1.0, miss_min = 1.0;
  for (double p : probs) {
    miss *= (1.0 - p);
    miss_min *= (1.0 - p_min);
  }
  BoundResult out;
  out.exact = 1.0 - miss;
  out.bound = 1.0 - miss_min;
  if (out.exact < out.bound - 1e-12)
    throw std::logic_error("bound_ps: exact fell below the lower bound");
  return out;
}

}  // namespace shade
