#pragma once

#include <cstdint>
#include <random>

#include "fdrscca/core.hpp"

namespace fdrscca {

using Rng = std::mt19937_64;

// SplitMix64 finalizer. Bijective on 64-bit words.
std::uint64_t mix64(std::uint64_t z) noexcept;

// Child seed for stream `index` under `master`:
//   mix64(master + (index + 1) * 0x9E3779B97F4A7C15)
// Index-derived, so parallel execution order never changes which seed a task sees.
std::uint64_t child_seed(std::uint64_t master, std::uint64_t index) noexcept;

// Named sub-streams of one seed (e.g. data draw vs. split vs. permutation).
enum class Stream : std::uint64_t {
  kData = 1,
  kSplit = 2,
  kLatent = 3,
  kPermutation = 4,
  kFolds = 5,
  kOracle = 6,
};
std::uint64_t stream_seed(std::uint64_t seed, Stream stream) noexcept;

// Fresh seed from std::random_device, for runs without an explicit seed.
std::uint64_t entropy_seed();

Matrix standard_normal(Index rows, Index cols, Rng& rng);

// Uniformly random permutation of 0..n-1.
IndexSet random_permutation(Index n, Rng& rng);

}  // namespace fdrscca
