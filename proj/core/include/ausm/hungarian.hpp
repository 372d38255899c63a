#pragma once

#include <span>
#include <utility>
#include <vector>

#include "ausm/tensor.hpp"

namespace ausm {

/// One-to-one matching between rows (queries) and columns (ground truth).
struct Assignment {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (query, gt), ascending query
  std::vector<std::size_t> unmatched_queries;
  std::vector<std::size_t> unmatched_gt;
  double cost = 0.0;  // sum of matched entries, accumulated in ascending query order
};

/// Minimum-cost assignment of min(rows, cols) pairs (Kuhn-Munkres with
/// potentials, O(n^2 m)). Costs must be finite.
Assignment hungarian(std::span<const double> cost, std::size_t rows, std::size_t cols);
Assignment hungarian(const Tensor& cost);

}  // namespace ausm
