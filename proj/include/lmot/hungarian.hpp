#pragma once

#include <utility>
#include <vector>

namespace lmot::track {

struct Assignment {
    std::vector<std::pair<int, int>> pairs;  // (row, col), sorted by row
    double total_cost = 0.0;
};

/// Minimum-total-cost maximum-cardinality matching on an m x n cost matrix.
/// +infinity marks forbidden pairs; rectangular matrices are padded internally.
Assignment hungarian(const std::vector<std::vector<double>>& cost);

}  // namespace lmot::track
