#include "lmot/hungarian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lmot/errors.hpp"

namespace lmot::track {

// Jonker-Volgenant style shortest augmenting path with row/column potentials,
// O(n^3) on the padded square matrix.
Assignment hungarian(const std::vector<std::vector<double>>& cost) {
    const int m = static_cast<int>(cost.size());
    const int nc = m > 0 ? static_cast<int>(cost[0].size()) : 0;
    Assignment result;
    if (m == 0 || nc == 0) return result;

    double max_abs = 0.0;
    for (int i = 0; i < m; ++i) {
        if (static_cast<int>(cost[i].size()) != nc) {
            throw ContractViolation("hungarian: ragged cost matrix");
        }
        for (double v : cost[i]) {
            if (std::isnan(v)) throw ContractViolation("hungarian: NaN cost");
            if (std::isfinite(v)) max_abs = std::max(max_abs, std::abs(v));
        }
    }
    const int n = std::max(m, nc);
    const double big = (max_abs + 1.0) * (n + 1);
    auto entry = [&](int r, int c) -> double {
        if (r >= m || c >= nc) return big;
        const double v = cost[r][c];
        return std::isfinite(v) ? v : big;
    };

    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> match_col(n + 1, 0);  // 1-based; match_col[c] = row matched to column c
    std::vector<int> way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        match_col[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = match_col[j0];
            double delta = inf;
            int j1 = -1;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = entry(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[match_col[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match_col[j0] != 0);
        do {
            const int j1 = way[j0];
            match_col[j0] = match_col[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    std::vector<std::pair<int, int>> pairs;
    for (int j = 1; j <= n; ++j) {
        const int r = match_col[j] - 1;
        const int c = j - 1;
        if (r < m && c < nc && std::isfinite(cost[r][c])) {
            pairs.emplace_back(r, c);
            result.total_cost += cost[r][c];
        }
    }
    std::sort(pairs.begin(), pairs.end());
    result.pairs = std::move(pairs);
    return result;
}

}  // namespace lmot::track
