#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace reentry::detail {

// Fisher-Yates over a fixed engine; std::shuffle and the std distributions
// differ between standard libraries.
template <typename T>
void seeded_shuffle(std::vector<T>& items, std::mt19937_64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::uint64_t bound = i;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t draw;
    do {
      draw = rng();
    } while (draw >= limit);
    std::swap(items[i - 1], items[static_cast<std::size_t>(draw % bound)]);
  }
}

}  // namespace reentry::detail
