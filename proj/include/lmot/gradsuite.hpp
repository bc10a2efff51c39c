#pragma once

#include <string>
#include <vector>

namespace lmot::gradsuite {

struct OpReport {
    std::string name;
    double max_rel_err = 0.0;
    bool pass = false;
};

/// Finite-difference verification of every backward operator over n_seeds
/// randomized shapes (up to 2x4x8x8). With mutate=true one conv kernel
/// gradient is deliberately scaled x2 and the suite must report a failure.
std::vector<OpReport> run_suite(int n_seeds, double eps, double tol, bool mutate = false);

bool all_pass(const std::vector<OpReport>& reports);

}  // namespace lmot::gradsuite
