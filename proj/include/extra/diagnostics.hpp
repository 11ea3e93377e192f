#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "extra/linalg.hpp"
#include "extra/objectives.hpp"
#include "extra/rng.hpp"
#include "extra/trace.hpp"

namespace extra::diagnostics {

using linalg::DenseMatrix;
using linalg::SymMatrix;
using objectives::StackedObjective;
using objectives::Vector;
using solvers::SolverTrace;
using std::size_t;

/// Stack with every row equal to the given point.
inline DenseMatrix consensual_stack(const Vector& x, size_t n) {
    DenseMatrix stack(n, x.size());
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < x.size(); ++j) stack(i, j) = x[j];
    return stack;
}

/// Frobenius distance of a stack from its row average; zero exactly when
/// the stack is consensual.
inline double consensus_violation(const DenseMatrix& x) {
    const size_t n = x.rows();
    Vector mean(x.cols(), 0.0);
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < x.cols(); ++j) mean[j] += x(i, j);
    for (double& v : mean) v /= static_cast<double>(n);
    double s = 0.0;
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < x.cols(); ++j) {
            const double d = x(i, j) - mean[j];
            s += d * d;
        }
    return std::sqrt(s);
}

/// ||x - 1 (x*)^T||_F / ||x0 - 1 (x*)^T||_F, the residual plotted by the
/// experiment harness.
inline double relative_residual(const DenseMatrix& x, const Vector& x_star,
                                const DenseMatrix& x0) {
    const DenseMatrix star = consensual_stack(x_star, x.rows());
    const double denom = (x0 - star).frobenius_norm();
    if (denom == 0.0) throw Error("relative_residual: x0 equals the reference stack");
    return (x - star).frobenius_norm() / denom;
}

/// Running state for the first-order optimality residuals: U = (Wt - W)^1/2
/// and the accumulated dual-like sequence q^k = sum_{t<=k} U x^t. The
/// implied block metric is the identity on the q block and Wt on the x
/// block.
class OptimalityTracker {
public:
    OptimalityTracker(SymMatrix u, SymMatrix wt, double alpha, size_t p)
        : u_(std::move(u)), wt_(std::move(wt)), alpha_(alpha), q_(u_.size(), p) {}

    /// Folds the next iterate into the running sum.
    void update(const DenseMatrix& x) {
        q_ += linalg::mul(u_, x);
        ++updates_;
    }

    const SymMatrix& u() const { return u_; }
    const SymMatrix& wt() const { return wt_; }
    double alpha() const { return alpha_; }
    const DenseMatrix& q() const { return q_; }
    long updates() const { return updates_; }

private:
    SymMatrix u_;
    SymMatrix wt_;
    double alpha_;
    DenseMatrix q_;
    long updates_ = 0;
};

/// The two squared optimality residuals at the tracker's current state:
/// ||U q + alpha grad f(x)||^2_Wt (optimality) and ||U x||^2_F (consensus).
inline std::pair<double, double> first_order_residuals(const DenseMatrix& x,
                                                       const OptimalityTracker& tracker,
                                                       const StackedObjective& obj) {
    DenseMatrix lhs = linalg::mul(tracker.u(), tracker.q());
    const DenseMatrix grad = obj.stacked_grad(x);
    for (size_t i = 0; i < lhs.rows(); ++i)
        for (size_t j = 0; j < lhs.cols(); ++j) lhs(i, j) += tracker.alpha() * grad(i, j);
    const double res1 = linalg::g_norm_sq(lhs, tracker.wt());
    const double res2 = linalg::mul(tracker.u(), x).frobenius_norm_sq();
    return {res1, res2};
}

/// Squared G-metric distance ||q - q*||^2_F + ||x - x*||^2_Wt.
inline double z_metric_distance(const DenseMatrix& x, const DenseMatrix& q,
                                const DenseMatrix& x_star, const DenseMatrix& q_star,
                                const SymMatrix& wt) {
    return (q - q_star).frobenius_norm_sq() + linalg::g_norm_sq(x - x_star, wt);
}

/// Solves U q* = -alpha grad f(x*) inside range(U) through the eigenbasis
/// of Wt - W: components on eigenvalues below zero_tol (relative) are
/// projected out, which is exactly the canonical range(U) solution.
inline DenseMatrix q_star_reference(const linalg::EigDecomposition& diff_eig,
                                    const DenseMatrix& grad_star, double alpha,
                                    double zero_tol = 1e-9) {
    const size_t n = grad_star.rows();
    const size_t p = grad_star.cols();
    const double scale = std::max(std::abs(diff_eig.eigenvalues.front()),
                                  std::abs(diff_eig.eigenvalues.back()));
    const double threshold = zero_tol * std::max(1.0, scale);

    // V^T (-alpha grad), scaled by 1/sqrt(s) on nonzero eigenvalues, then V.
    DenseMatrix coeff(n, p);
    for (size_t k = 0; k < n; ++k) {
        const double s = diff_eig.eigenvalues[k];
        if (s <= threshold) continue;
        const double inv_root = 1.0 / std::sqrt(s);
        for (size_t j = 0; j < p; ++j) {
            double dot = 0.0;
            for (size_t i = 0; i < n; ++i) dot += diff_eig.eigenvectors(i, k) * grad_star(i, j);
            coeff(k, j) = -alpha * inv_root * dot;
        }
    }
    DenseMatrix q(n, p);
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < p; ++j) {
            double acc = 0.0;
            for (size_t k = 0; k < n; ++k) acc += diff_eig.eigenvectors(i, k) * coeff(k, j);
            q(i, j) = acc;
        }
    return q;
}

/// Result of replaying the per-iteration contraction inequality
/// d_k - d_{k+1} >= zeta * s_k along a trace.
struct ContractionReport {
    bool skipped = false;  // step size at or above the bound, nothing to check
    double zeta = 0.0;
    double slack_tolerance = 0.0;
    double worst_slack = 0.0;  // min over k of lhs - zeta*rhs
    std::vector<long> violations;

    bool passed() const { return !skipped && violations.empty(); }
};

inline double contraction_zeta(double alpha, double lf, double lambda_min_wt) {
    return 1.0 - alpha * lf / (2.0 * lambda_min_wt);
}

/// Checks the contraction inequality at every recorded iteration. The
/// violation tolerance scales with the initial metric distance.
inline ContractionReport contraction_check(const SolverTrace& trace, const SymMatrix& wt,
                                           double alpha, double lf) {
    ContractionReport rep;
    const double lambda_min_wt = linalg::eigh_jacobi(wt).min_eigenvalue();
    rep.zeta = contraction_zeta(alpha, lf, lambda_min_wt);
    if (rep.zeta <= 0.0) {
        rep.skipped = true;
        return rep;
    }
    if (trace.records.empty()) return rep;
    rep.slack_tolerance = 1e-9 * std::max(1.0, trace.records.front().z_dist_sq);
    rep.worst_slack = std::numeric_limits<double>::infinity();
    for (size_t k = 0; k < trace.z_step_sq.size(); ++k) {
        const double lhs = trace.records[k].z_dist_sq - trace.records[k + 1].z_dist_sq;
        const double slack = lhs - rep.zeta * trace.z_step_sq[k];
        rep.worst_slack = std::min(rep.worst_slack, slack);
        if (slack < -rep.slack_tolerance) rep.violations.push_back(static_cast<long>(k));
    }
    return rep;
}

/// Result of the telescoping running-average bound and the running-best
/// tail behaviour.
struct ErgodicReport {
    bool skipped = false;
    double zeta = 0.0;
    std::vector<long> violations;      // k where the running average exceeds the bound
    bool best_tail_decreasing = false;  // k * min_{t<k} s_t shrank over the tail half
    long active_window = 0;            // steps before the run hit its numeric floor

    bool passed() const { return !skipped && violations.empty() && best_tail_decreasing; }
};

/// Verifies sum_{t<k} s_t <= d_0 / zeta for every k (the running-average
/// O(1/k) bound) and that k * min_{t<k} s_t decreases across the second
/// half of the progress window (the o(1/k) running-best behaviour). Once a
/// run converges, s_t jitters at the floating-point floor and k * min grows
/// again, so the tail comparison stops at the last step still 100x above
/// the smallest observed value.
inline ErgodicReport ergodic_rate_check(const SolverTrace& trace, const SymMatrix& wt,
                                        double alpha, double lf) {
    ErgodicReport rep;
    const double lambda_min_wt = linalg::eigh_jacobi(wt).min_eigenvalue();
    rep.zeta = contraction_zeta(alpha, lf, lambda_min_wt);
    if (rep.zeta <= 0.0 || trace.records.empty()) {
        rep.skipped = true;
        return rep;
    }
    const double d0 = trace.records.front().z_dist_sq;
    const double bound = d0 / rep.zeta;
    const double slack = 1e-9 * std::max(1.0, bound);

    double partial = 0.0;
    double floor = std::numeric_limits<double>::infinity();
    for (size_t k = 0; k < trace.z_step_sq.size(); ++k) {
        partial += trace.z_step_sq[k];
        if (partial > bound + slack) rep.violations.push_back(static_cast<long>(k) + 1);
        floor = std::min(floor, trace.z_step_sq[k]);
    }

    size_t window = 0;
    for (size_t k = 0; k < trace.z_step_sq.size(); ++k)
        if (trace.z_step_sq[k] > 100.0 * floor) window = k + 1;
    rep.active_window = static_cast<long>(window);

    if (window >= 4) {
        double best = std::numeric_limits<double>::infinity();
        double mid_value = 0.0;
        for (size_t k = 0; k < window; ++k) {
            best = std::min(best, trace.z_step_sq[k]);
            if (k + 1 == window / 2) mid_value = static_cast<double>(k + 1) * best;
        }
        const double last_value = static_cast<double>(window) * best;
        rep.best_tail_decreasing = last_value <= mid_value * (1.0 + 1e-9);
    } else {
        rep.best_tail_decreasing = true;  // too short to grade
    }
    return rep;
}

/// Geometric fit of a residual window: per-iteration factor, goodness of
/// fit, and (for Huber runs) the first iteration whose per-sample residuals
/// all entered the quadratic zone.
struct RateReport {
    long window_begin = 0;
    long window_end = 0;  // exclusive; may be truncated at a zero residual
    double factor = 1.0;
    double r_squared = 1.0;
    long phase_boundary = -1;

    bool fit_succeeded() const { return window_end - window_begin >= 2; }
};

/// Least-squares line through (k, log r_k) over records [begin, end).
/// Residuals at or below zero truncate the window. A window with no spread
/// in log-residuals reports factor 1 with perfect fit.
inline RateReport rate_fit(const SolverTrace& trace, long begin, long end) {
    RateReport rep;
    const long total = static_cast<long>(trace.records.size());
    if (begin < 0) begin = 0;
    if (end > total) end = total;
    rep.window_begin = begin;

    for (const auto& r : trace.records) {
        if (r.in_quadratic_zone) {
            rep.phase_boundary = r.k;
            break;
        }
    }

    std::vector<double> ks, logs;
    for (long k = begin; k < end; ++k) {
        const double r = trace.records[static_cast<size_t>(k)].relative_residual;
        if (!(r > 0.0)) break;  // truncate at the first exact zero / underflow
        ks.push_back(static_cast<double>(k));
        logs.push_back(std::log(r));
    }
    rep.window_end = begin + static_cast<long>(ks.size());
    if (ks.size() < 2) return rep;

    const double n = static_cast<double>(ks.size());
    double mean_k = 0.0, mean_y = 0.0;
    for (size_t i = 0; i < ks.size(); ++i) {
        mean_k += ks[i];
        mean_y += logs[i];
    }
    mean_k /= n;
    mean_y /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (size_t i = 0; i < ks.size(); ++i) {
        const double dk = ks[i] - mean_k;
        const double dy = logs[i] - mean_y;
        sxx += dk * dk;
        sxy += dk * dy;
        syy += dy * dy;
    }
    const double slope = sxy / sxx;
    rep.factor = std::exp(slope);
    if (syy <= 1e-18) {
        rep.r_squared = 1.0;  // constant residuals: exact fit with slope ~ 0
    } else {
        double ss_res = 0.0;
        for (size_t i = 0; i < ks.size(); ++i) {
            const double fit = mean_y + slope * (ks[i] - mean_k);
            const double d = logs[i] - fit;
            ss_res += d * d;
        }
        rep.r_squared = 1.0 - ss_res / syy;
    }
    return rep;
}

/// Curvature ratio of the penalized stack objective
/// g(x) = f(x) + (1/4a) ||x||^2_{Wt-W} between x and the reference stack:
/// <grad g(x) - grad g(x*), x - x*> / ||x - x*||^2_F.
inline double rsc_ratio(const StackedObjective& obj, const SymMatrix& wt, const SymMatrix& w,
                        double alpha, const DenseMatrix& x_star, const DenseMatrix& x) {
    const double dist_sq = (x - x_star).frobenius_norm_sq();
    if (dist_sq == 0.0) throw Error("rsc_ratio: sample coincides with the reference");
    const SymMatrix penalty = wt - w;
    DenseMatrix dg = obj.stacked_grad(x) - obj.stacked_grad(x_star);
    const DenseMatrix pen = linalg::mul(penalty, x - x_star);
    const double half_inv_alpha = 1.0 / (2.0 * alpha);
    double inner = 0.0;
    for (size_t i = 0; i < dg.rows(); ++i)
        for (size_t j = 0; j < dg.cols(); ++j)
            inner += (dg(i, j) + half_inv_alpha * pen(i, j)) * (x(i, j) - x_star(i, j));
    return inner / dist_sq;
}

/// Empirical restricted-strong-convexity constant: the minimum rsc_ratio
/// over `samples` random stacks x = x* + N(0,1) offsets.
inline double rsc_probe(const StackedObjective& obj, const SymMatrix& wt, const SymMatrix& w,
                        double alpha, const DenseMatrix& x_star, size_t samples,
                        std::uint64_t seed) {
    if (!(alpha > 0.0)) throw Error("rsc_probe: alpha must be positive");
    rng::Xorshift64Star gen(seed);
    double min_ratio = std::numeric_limits<double>::infinity();
    for (size_t s = 0; s < samples; ++s) {
        DenseMatrix x = x_star;
        bool degenerate = true;
        for (size_t i = 0; i < x.rows(); ++i)
            for (size_t j = 0; j < x.cols(); ++j) {
                const double offset = gen.next_normal();
                x(i, j) += offset;
                if (offset != 0.0) degenerate = false;
            }
        if (degenerate) continue;
        min_ratio = std::min(min_ratio, rsc_ratio(obj, wt, w, alpha, x_star, x));
    }
    return min_ratio;
}

}  // namespace extra::diagnostics
