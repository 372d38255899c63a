#include "ausm/hungarian.hpp"

#include <cmath>
#include <limits>

#include "ausm/error.hpp"

namespace ausm {

namespace {

// Rows <= cols. Returns for each row the matched column.
std::vector<std::size_t> solve(const std::vector<double>& a, std::size_t n, std::size_t m) {
  const double inf = std::numeric_limits<double>::infinity();
  // 1-based potentials and matching; p[j] is the row matched to column j.
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = a[(i0 - 1) * m + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> row_to_col(n);
  for (std::size_t j = 1; j <= m; ++j)
    if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

}  // namespace

Assignment hungarian(std::span<const double> cost, std::size_t rows, std::size_t cols) {
  if (cost.size() != rows * cols) throw DimensionError("hungarian: cost size does not match rows x cols");
  for (double c : cost)
    if (!std::isfinite(c)) throw ContractError("hungarian: costs must be finite");

  std::vector<std::size_t> query_to_gt(rows, cols);  // cols marks unmatched
  if (rows > 0 && cols > 0) {
    if (rows <= cols) {
      const auto match = solve(std::vector<double>(cost.begin(), cost.end()), rows, cols);
      for (std::size_t i = 0; i < rows; ++i) query_to_gt[i] = match[i];
    } else {
      std::vector<double> t(rows * cols);
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) t[j * rows + i] = cost[i * cols + j];
      const auto match = solve(t, cols, rows);
      for (std::size_t j = 0; j < cols; ++j) query_to_gt[match[j]] = j;
    }
  }

  Assignment out;
  std::vector<char> gt_used(cols, 0);
  for (std::size_t i = 0; i < rows; ++i) {
    if (query_to_gt[i] == cols) {
      out.unmatched_queries.push_back(i);
      continue;
    }
    out.pairs.emplace_back(i, query_to_gt[i]);
    gt_used[query_to_gt[i]] = 1;
    out.cost += cost[i * cols + query_to_gt[i]];
  }
  for (std::size_t j = 0; j < cols; ++j)
    if (!gt_used[j]) out.unmatched_gt.push_back(j);
  return out;
}

Assignment hungarian(const Tensor& cost) {
  if (cost.rank() != 2) throw DimensionError("hungarian: cost must be [Nq, Ng], got " + shape_str(cost.shape()));
  std::vector<double> c(cost.data().begin(), cost.data().end());
  return hungarian(c, cost.dim(0), cost.dim(1));
}

}  // namespace ausm
