#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "extra/diagnostics.hpp"
#include "extra/linalg.hpp"
#include "extra/mixing.hpp"
#include "extra/objectives.hpp"
#include "extra/trace.hpp"

namespace extra::solvers {

using linalg::DenseMatrix;
using linalg::SymMatrix;
using mixing::MixingPair;
using objectives::StackedObjective;
using objectives::Vector;
using std::size_t;

/// n x p stack whose row i is agent i's local copy of the variable.
using AgentStack = DenseMatrix;

enum class SolverKind { dgd, extra };

enum class ScheduleKind { fixed, power_decay };

/// Fixed step or base/(k+1)^exponent, exponent 1/3 or 1/2.
struct StepSchedule {
    ScheduleKind kind = ScheduleKind::fixed;
    double base = 0.0;
    double exponent = 0.0;

    static StepSchedule fixed(double alpha) { return {ScheduleKind::fixed, alpha, 0.0}; }
    static StepSchedule decay(double alpha0, double exponent) {
        return {ScheduleKind::power_decay, alpha0, exponent};
    }
};

/// Step size applied at iteration k (the denominator is k+1 so the first
/// step is the base value).
inline double schedule_alpha(const StepSchedule& s, long k) {
    if (k < 0) throw Error("schedule_alpha: negative iteration");
    if (!(s.base > 0.0)) throw Error("schedule_alpha: base step must be positive");
    if (s.kind == ScheduleKind::fixed) return s.base;
    return s.base / std::pow(static_cast<double>(k + 1), s.exponent);
}

namespace detail {

inline void throw_if_not_finite(const DenseMatrix& x, long iteration) {
    if (!x.all_finite()) throw DivergenceError("solver produced a non-finite iterate", iteration);
}

}  // namespace detail

/// One diffusion-gradient step W x - alpha_k grad f(x). A zero step is
/// pure neighborhood averaging.
inline AgentStack dgd_step(const AgentStack& x, const SymMatrix& w, double alpha_k,
                           const StackedObjective& obj) {
    if (alpha_k < 0.0) throw Error("dgd_step: step size must not be negative");
    AgentStack next = linalg::mul(w, x);
    const DenseMatrix grad = obj.stacked_grad(x);
    for (size_t i = 0; i < next.rows(); ++i)
        for (size_t j = 0; j < next.cols(); ++j) next(i, j) -= alpha_k * grad(i, j);
    return next;
}

/// Two-iterate solver state. grad_prev always holds grad f(x_prev), so each
/// stacked gradient is computed once and consumed by two consecutive
/// updates.
struct ExtraState {
    AgentStack x_prev;
    AgentStack x_curr;
    DenseMatrix grad_prev;
    long k = 0;  // completed main-loop steps; x_curr is iterate k+1
    double alpha = 0.0;
};

/// First update x^1 = W x^0 - alpha grad f(x^0).
inline ExtraState extra_init(const AgentStack& x0, const SymMatrix& w, double alpha,
                             const StackedObjective& obj) {
    if (!(alpha > 0.0)) throw Error("extra_init: step size must be positive");
    ExtraState s;
    s.x_prev = x0;
    s.grad_prev = obj.stacked_grad(x0);
    s.x_curr = linalg::mul(w, x0);
    for (size_t i = 0; i < x0.rows(); ++i)
        for (size_t j = 0; j < x0.cols(); ++j) s.x_curr(i, j) -= alpha * s.grad_prev(i, j);
    s.k = 0;
    s.alpha = alpha;
    detail::throw_if_not_finite(s.x_curr, 1);
    return s;
}

/// Main update x^{k+2} = (I+W) x^{k+1} - Wt x^k - alpha [grad f(x^{k+1}) -
/// grad f(x^k)]. Exactly one stacked gradient evaluation per call.
inline void extra_step(ExtraState& s, const SymMatrix& w, const SymMatrix& wt,
                       const StackedObjective& obj) {
    const DenseMatrix grad_curr = obj.stacked_grad(s.x_curr);
    const DenseMatrix wx = linalg::mul(w, s.x_curr);
    const DenseMatrix wtx = linalg::mul(wt, s.x_prev);
    AgentStack next(s.x_curr.rows(), s.x_curr.cols());
    for (size_t i = 0; i < next.rows(); ++i)
        for (size_t j = 0; j < next.cols(); ++j)
            next(i, j) = s.x_curr(i, j) + wx(i, j) - wtx(i, j) -
                         s.alpha * (grad_curr(i, j) - s.grad_prev(i, j));
    detail::throw_if_not_finite(next, s.k + 2);
    s.x_prev = std::move(s.x_curr);
    s.x_curr = std::move(next);
    s.grad_prev = grad_curr;
    ++s.k;
}

/// Corrected-diffusion state: a plain DGD update plus the running
/// correction sum_{t<k} (W - Wt) x^t, maintained incrementally.
struct CorrectedDgdState {
    AgentStack x_curr;
    DenseMatrix correction;
    long k = 0;
    double alpha = 0.0;
};

inline CorrectedDgdState corrected_dgd_init(const AgentStack& x0, double alpha) {
    if (!(alpha > 0.0)) throw Error("corrected_dgd_init: step size must be positive");
    return {x0, DenseMatrix(x0.rows(), x0.cols()), 0, alpha};
}

/// x^{k+1} = W x^k - alpha grad f(x^k) + sum_{t=0}^{k-1} (W - Wt) x^t.
inline void corrected_dgd_step(CorrectedDgdState& s, const SymMatrix& w, const SymMatrix& wt,
                               const StackedObjective& obj) {
    const DenseMatrix grad = obj.stacked_grad(s.x_curr);
    const DenseMatrix wx = linalg::mul(w, s.x_curr);
    AgentStack next(s.x_curr.rows(), s.x_curr.cols());
    for (size_t i = 0; i < next.rows(); ++i)
        for (size_t j = 0; j < next.cols(); ++j)
            next(i, j) = wx(i, j) - s.alpha * grad(i, j) + s.correction(i, j);
    detail::throw_if_not_finite(next, s.k + 1);
    // Fold x^k into the correction before advancing.
    s.correction += wx - linalg::mul(wt, s.x_curr);
    s.x_curr = std::move(next);
    ++s.k;
}

struct RunConfig {
    SolverKind kind = SolverKind::extra;
    StepSchedule schedule = StepSchedule::fixed(0.1);
    long budget = 1000;
    double stop = 0.0;  // early exit when the relative residual drops this low
    long thin = 1;      // keep every thin-th iterate (plus the final one)
    bool override_assumptions = false;
    bool allow_unsafe_alpha = false;
};

/// Runs one solver over a validated mixing pair, recording the diagnostics
/// trace against the reference solution. Divergence is recorded on the
/// trace rather than thrown, so callers can run several solvers and keep
/// the survivors.
inline SolverTrace run(const RunConfig& cfg, const MixingPair& pair,
                       const StackedObjective& obj, const AgentStack& x0,
                       const Vector& x_star) {
    if (!pair.report.all_passed() && !cfg.override_assumptions)
        throw Error("run: mixing pair fails the assumption check (override to force)");
    if (cfg.budget < 0) throw Error("run: negative budget");
    if (cfg.thin < 1) throw Error("run: thinning stride must be >= 1");

    const double alpha0 = cfg.schedule.base;
    if (cfg.kind == SolverKind::extra) {
        if (cfg.schedule.kind != ScheduleKind::fixed)
            throw Error("run: the two-matrix solver uses a fixed step size");
        const double bound = 2.0 * pair.lambda_min_wt / obj.lipschitz();
        if (!(alpha0 < bound) && !cfg.allow_unsafe_alpha)
            throw Error("run: step size " + std::to_string(alpha0) +
                        " is not strictly below the bound " + std::to_string(bound));
    }

    const size_t n = x0.rows();
    const size_t p = x0.cols();
    const SymMatrix u = linalg::psd_sqrt(pair.wt - pair.w);
    diagnostics::OptimalityTracker tracker(u, pair.wt, alpha0, p);

    const DenseMatrix star_stack = diagnostics::consensual_stack(x_star, n);
    const DenseMatrix grad_star = obj.stacked_grad(star_stack);
    const DenseMatrix q_star =
        diagnostics::q_star_reference(linalg::eigh_jacobi(pair.wt - pair.w), grad_star, alpha0);

    std::vector<const objectives::HuberObjective*> huber_agents;
    bool all_huber = true;
    for (size_t i = 0; i < obj.agent_count(); ++i) {
        const auto* h = dynamic_cast<const objectives::HuberObjective*>(&obj.agent(i));
        if (h == nullptr) {
            all_huber = false;
            break;
        }
        huber_agents.push_back(h);
    }

    SolverTrace trace;
    DenseMatrix q_prev(n, p);
    DenseMatrix x_prev_diag(n, p);

    auto record = [&](long k, const DenseMatrix& x) {
        tracker.update(x);
        TraceRecord rec;
        rec.k = k;
        rec.alpha_k = schedule_alpha(cfg.schedule, k);
        rec.relative_residual = diagnostics::relative_residual(x, x_star, x0);
        rec.consensus_violation = diagnostics::consensus_violation(x);
        const auto [res1, res2] = diagnostics::first_order_residuals(x, tracker, obj);
        rec.res1 = res1;
        rec.res2 = res2;
        rec.z_dist_sq = diagnostics::z_metric_distance(x, tracker.q(), star_stack, q_star, pair.wt);
        if (all_huber) {
            rec.in_quadratic_zone = true;
            for (size_t i = 0; i < huber_agents.size(); ++i) {
                if (!huber_agents[i]->in_quadratic_zone(x.row(i))) {
                    rec.in_quadratic_zone = false;
                    break;
                }
            }
        }
        if (k > 0) {
            const double step_sq = (q_prev - tracker.q()).frobenius_norm_sq() +
                                   linalg::g_norm_sq(x_prev_diag - x, pair.wt);
            trace.z_step_sq.push_back(step_sq);
        }
        q_prev = tracker.q();
        x_prev_diag = x;
        trace.records.push_back(rec);
        if (k % cfg.thin == 0) trace.iterates.emplace_back(k, x);
        return rec.relative_residual;
    };

    double rel = record(0, x0);
    if (cfg.budget == 0 || (cfg.stop > 0.0 && rel <= cfg.stop)) return trace;

    try {
        if (cfg.kind == SolverKind::dgd) {
            AgentStack x = x0;
            for (long k = 1; k <= cfg.budget; ++k) {
                x = dgd_step(x, pair.w, schedule_alpha(cfg.schedule, k - 1), obj);
                detail::throw_if_not_finite(x, k);
                rel = record(k, x);
                if (cfg.stop > 0.0 && rel <= cfg.stop) break;
            }
            if (trace.iterates.back().first != trace.records.back().k)
                trace.iterates.emplace_back(trace.records.back().k, x);
        } else {
            ExtraState s = extra_init(x0, pair.w, alpha0, obj);
            rel = record(1, s.x_curr);
            while (s.k + 1 < cfg.budget && !(cfg.stop > 0.0 && rel <= cfg.stop)) {
                extra_step(s, pair.w, pair.wt, obj);
                rel = record(s.k + 1, s.x_curr);
            }
            if (trace.iterates.back().first != trace.records.back().k)
                trace.iterates.emplace_back(trace.records.back().k, s.x_curr);
        }
    } catch (const DivergenceError& err) {
        trace.diverged = true;
        trace.diverged_at = err.iteration();
    }
    return trace;
}

}  // namespace extra::solvers
