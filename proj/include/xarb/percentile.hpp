#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

namespace xarb {

/// Nearest-rank percentile: the ceil(q/100 * n)-th smallest value (1-based),
/// and the minimum for q = 0. Empty input gives nullopt.
template <typename T>
std::optional<T> nearest_rank(std::vector<T> values, double q) {
  if (values.empty()) return std::nullopt;
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  // Round q*n/100 to 1e-9 first so 25% of 100 is rank 25, not 26.
  const double scaled = std::round(q / 100.0 * n * 1e9) / 1e9;
  auto rank = static_cast<std::size_t>(std::ceil(scaled));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  return values[rank - 1];
}

}  // namespace xarb
