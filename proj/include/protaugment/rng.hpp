#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace protaugment {

// All sampling goes through this engine.
using Rng = std::mt19937_64;

// Uniform in [0, 1) with 53 bits of precision.
double uniform01(Rng& rng);

// Uniform integer in [0, n). n must be positive.
std::size_t uniform_index(Rng& rng, std::size_t n);

// Fisher-Yates shuffle; platform independent unlike std::shuffle.
template <typename T>
void shuffle_in_place(std::vector<T>& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::size_t j = uniform_index(rng, i);
    std::swap(items[i - 1], items[j]);
  }
}

// k distinct indices from [0, n) in draw order.
std::vector<std::size_t> sample_without_replacement(Rng& rng, std::size_t n, std::size_t k);

// Derives an independent stream seed from a base seed and a tag.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag);

}  // namespace protaugment
