#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace neuflow {

// All randomness in the project flows through seeded mt19937_64 instances so
// that every sample, init, and test case is reproducible from a single seed.
using Rng = std::mt19937_64;

inline Rng make_rng(uint64_t seed) { return Rng(seed); }

template <class T>
std::vector<T> randn_vec(Rng& rng, size_t n, T stddev = T(1), T mean = T(0)) {
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<T> v(n);
  for (auto& x : v) x = mean + stddev * static_cast<T>(d(rng));
  return v;
}

template <class T>
std::vector<T> uniform_vec(Rng& rng, size_t n, T lo, T hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<T> v(n);
  for (auto& x : v) x = static_cast<T>(d(rng));
  return v;
}

}  // namespace neuflow
