#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace qup {

struct WeightedEdge {
  int u = 0;
  int v = 0;
  int64_t w = 0;
};

// Minimum-weight perfect matching on a general graph with nonnegative integer
// weights (blossom primal-dual, O(n^3)). Vertices are 0..n-1, n must be even.
// Parallel edges collapse to the cheapest one. Returns n/2 pairs, each with
// u < v, sorted by u. Throws std::runtime_error if no perfect matching exists.
std::vector<std::pair<int, int>> min_weight_perfect_matching(
    int n, const std::vector<WeightedEdge>& edges);

}  // namespace qup
