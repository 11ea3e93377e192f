#pragma once

#include <utility>
#include <vector>

#include "extra/linalg.hpp"

namespace extra::solvers {

/// One per-iteration diagnostics row. res1/res2 are the squared first-order
/// optimality residuals ||Uq + a grad||^2_Wt and ||Ux||^2_F; z_dist_sq is
/// the squared G-metric distance of (q, x) to the optimal pair.
struct TraceRecord {
    long k = 0;
    double alpha_k = 0.0;
    double relative_residual = 0.0;
    double consensus_violation = 0.0;
    double res1 = 0.0;
    double res2 = 0.0;
    double z_dist_sq = 0.0;
    bool in_quadratic_zone = true;  // vacuously true for non-Huber objectives
};

/// Full record of one solver run. `z_step_sq[k]` holds the squared G-metric
/// step ||z^k - z^{k+1}||^2_G, so it is one shorter than `records`.
/// Iterates are kept every `thin`-th iteration plus the final one.
struct SolverTrace {
    std::vector<TraceRecord> records;
    std::vector<double> z_step_sq;
    std::vector<std::pair<long, linalg::DenseMatrix>> iterates;
    bool diverged = false;
    long diverged_at = -1;

    long iterations() const { return static_cast<long>(records.size()) - 1; }

    const TraceRecord& final_record() const { return records.back(); }

    /// Iterate stored for index k; throws if thinning dropped it.
    const linalg::DenseMatrix& iterate(long k) const {
        for (const auto& [idx, x] : iterates)
            if (idx == k) return x;
        throw Error("trace does not hold iterate " + std::to_string(k));
    }
};

}  // namespace extra::solvers
