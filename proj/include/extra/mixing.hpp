#pragma once

#include <cmath>
#include <sstream>
#include <string>

#include "extra/graph.hpp"
#include "extra/linalg.hpp"

namespace extra::mixing {

using linalg::DenseMatrix;
using linalg::SymMatrix;
using std::size_t;

/// Metropolis constant edge weights: w_ij = 1/(max(deg(i),deg(j)) + eps)
/// on edges, zero off-pattern, diagonal filled so each row sums to one.
inline SymMatrix metropolis(const graph::Graph& g, double eps = 1.0) {
    if (!(eps > 0.0)) throw Error("metropolis: eps must be positive");
    const size_t n = g.agent_count();
    SymMatrix w(n);
    for (auto [i, j] : g.edges())
        w.set(i, j, 1.0 / (static_cast<double>(std::max(g.degree(i), g.degree(j))) + eps));
    for (size_t i = 0; i < n; ++i) {
        double off = 0.0;
        for (size_t j : g.neighbors(i)) off += w(i, j);
        w.set(i, i, 1.0 - off);
    }
    return w;
}

/// Laplacian-based constant edge weights W = I - L/tau. Requires
/// tau > lambda_max(L)/2, checked with the eigensolver.
inline SymMatrix laplacian_weights(const graph::Graph& g, double tau) {
    const SymMatrix l = graph::laplacian(g);
    const double lmax = linalg::eigh_jacobi(l).max_eigenvalue();
    if (!(tau > 0.5 * lmax)) throw Error("laplacian_weights: spectral condition violated");
    const size_t n = g.agent_count();
    SymMatrix w(n);
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j <= i; ++j)
            w.set(i, j, (i == j ? 1.0 : 0.0) - l(i, j) / tau);
    return w;
}

/// Default scaling when lambda_max(L) is not wanted: max degree + 1.
inline double default_tau(const graph::Graph& g) {
    return static_cast<double>(g.max_degree()) + 1.0;
}

/// Canonical second mixing matrix (I + W)/2.
inline SymMatrix wtilde_default(const SymMatrix& w) {
    return 0.5 * (SymMatrix::identity(w.size()) + w);
}

/// Overshot second mixing matrix (1.5 I + W)/2.5. Violates the ordering
/// (I+W)/2 >= Wt in general; linear-rate runs may still converge.
inline SymMatrix wtilde_overshoot(const SymMatrix& w) {
    return (1.0 / 2.5) * (1.5 * SymMatrix::identity(w.size()) + w);
}

/// Per-part outcome of the mixing-matrix assumption check. Failures are
/// recorded, never thrown.
struct ValidationReport {
    bool decentralized = false;   // part 1: zero weights off the graph pattern
    bool symmetric = false;       // part 2
    bool null_space = false;      // part 3: null(Wt - W) = span(1), (I - Wt)1 = 0
    bool spectral = false;        // part 4: Wt > 0 and (I+W)/2 >= Wt >= W
    double max_off_pattern = 0.0;
    double max_asymmetry = 0.0;
    double max_row_sum_error_wt = 0.0;
    size_t null_dim = 0;
    double lambda_min_wt = 0.0;
    double lambda_min_avg_minus_wt = 0.0;
    double lambda_min_wt_minus_w = 0.0;

    bool all_passed() const { return decentralized && symmetric && null_space && spectral; }

    std::string to_string() const {
        std::ostringstream out;
        auto line = [&](const char* name, bool ok, const std::string& detail) {
            out << (ok ? "PASS" : "FAIL") << "  " << name << "  (" << detail << ")\n";
        };
        line("decentralized property", decentralized,
             "max off-pattern entry " + std::to_string(max_off_pattern));
        line("symmetry", symmetric, "max asymmetry " + std::to_string(max_asymmetry));
        line("null space property", null_space,
             "dim null(Wt-W) = " + std::to_string(null_dim) +
                 ", max |(I-Wt)1| = " + std::to_string(max_row_sum_error_wt));
        line("spectral property", spectral,
             "lambda_min(Wt) = " + std::to_string(lambda_min_wt) +
                 ", lambda_min((I+W)/2 - Wt) = " + std::to_string(lambda_min_avg_minus_wt) +
                 ", lambda_min(Wt - W) = " + std::to_string(lambda_min_wt_minus_w));
        return out.str();
    }
};

/// Checks the four mixing-matrix requirements: decentralized sparsity,
/// symmetry, the null-space identity on Wt - W, and the spectral ordering
/// Wt > 0, (I+W)/2 >= Wt >= W. Eigenvalue comparisons use `tol`.
inline ValidationReport verify_assumption1(const SymMatrix& w, const SymMatrix& wt,
                                           const graph::Graph& g, double tol = 1e-9) {
    const size_t n = g.agent_count();
    if (w.size() != n || wt.size() != n)
        throw DimensionError("verify_assumption1: matrix sizes do not match graph");
    ValidationReport rep;

    // Part 1: entries off the neighborhood pattern must vanish.
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = 0; j < i; ++j) {
            if (!g.has_edge(i, j)) {
                rep.max_off_pattern = std::max(rep.max_off_pattern,
                                               std::max(std::abs(w(i, j)), std::abs(wt(i, j))));
            }
        }
    }
    rep.decentralized = rep.max_off_pattern <= tol;

    // Part 2: symmetric storage makes this structural, kept for the report.
    rep.max_asymmetry = 0.0;
    rep.symmetric = true;

    // Part 3: null(Wt - W) = span(1) via the zero-eigenvalue multiplicity
    // of Wt - W, with the zero eigenvector aligned to 1/sqrt(n); plus
    // (I - Wt)1 = 0 as a row-sum check.
    const SymMatrix diff = wt - w;
    const auto diff_eig = linalg::eigh_jacobi(diff);
    const double diff_scale =
        std::max(std::abs(diff_eig.min_eigenvalue()), std::abs(diff_eig.max_eigenvalue()));
    const double zero_tol = tol * std::max(1.0, diff_scale);
    rep.null_dim = 0;
    size_t zero_index = 0;
    for (size_t k = 0; k < n; ++k) {
        if (std::abs(diff_eig.eigenvalues[k]) <= zero_tol) {
            zero_index = k;
            ++rep.null_dim;
        }
    }
    bool aligned = false;
    if (rep.null_dim == 1) {
        double inner = 0.0;
        for (size_t i = 0; i < n; ++i) inner += diff_eig.eigenvectors(i, zero_index);
        inner /= std::sqrt(static_cast<double>(n));
        aligned = std::abs(inner) >= 1.0 - 1e-8;
    }
    for (size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (size_t j = 0; j < n; ++j) row += wt(i, j);
        rep.max_row_sum_error_wt = std::max(rep.max_row_sum_error_wt, std::abs(row - 1.0));
    }
    rep.null_space = rep.null_dim == 1 && aligned && rep.max_row_sum_error_wt <= tol;

    // Part 4: Wt > 0 and (I+W)/2 >= Wt >= W.
    rep.lambda_min_wt = linalg::eigh_jacobi(wt).min_eigenvalue();
    rep.lambda_min_avg_minus_wt =
        linalg::eigh_jacobi(wtilde_default(w) - wt).min_eigenvalue();
    rep.lambda_min_wt_minus_w = diff_eig.min_eigenvalue();
    rep.spectral = rep.lambda_min_wt > tol && rep.lambda_min_avg_minus_wt >= -tol &&
                   rep.lambda_min_wt_minus_w >= -tol;

    return rep;
}

/// Largest singular value of W - (1/n) 1 1^T; below one means the averaging
/// part of the iteration contracts off the consensus line.
inline double dgd_spectral_gap(const SymMatrix& w) {
    const size_t n = w.size();
    SymMatrix shifted = w;
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j <= i; ++j)
            shifted.set(i, j, w(i, j) - 1.0 / static_cast<double>(n));
    const auto eig = linalg::eigh_jacobi(shifted);
    return std::max(std::abs(eig.min_eigenvalue()), std::abs(eig.max_eigenvalue()));
}

/// Fixed-step upper bound 2 lambda_min(Wt) / Lf for the two-matrix solver.
inline double extra_step_bound(const SymMatrix& wt, double lf) {
    if (!(lf > 0.0)) throw Error("extra_step_bound: Lipschitz constant must be positive");
    const double lmin = linalg::eigh_jacobi(wt).min_eigenvalue();
    if (!(lmin > 0.0)) throw NotPsdError("extra_step_bound: Wt is not positive definite");
    return 2.0 * lmin / lf;
}

/// The two mixing matrices with their cached spectral quantities and the
/// assumption report. Immutable once built.
struct MixingPair {
    SymMatrix w;
    SymMatrix wt;
    double lambda_min_w = 0.0;
    double lambda_min_wt = 0.0;
    double lambda_min_nonzero_diff = 0.0;  // smallest nonzero eigenvalue of Wt - W
    double spectral_gap = 0.0;             // sigma_max(W - 11^T/n)
    ValidationReport report;
};

inline MixingPair make_mixing_pair(SymMatrix w, SymMatrix wt, const graph::Graph& g,
                                   double tol = 1e-9) {
    MixingPair pair{std::move(w), std::move(wt), 0, 0, 0, 0, {}};
    pair.report = verify_assumption1(pair.w, pair.wt, g, tol);
    pair.lambda_min_w = linalg::eigh_jacobi(pair.w).min_eigenvalue();
    pair.lambda_min_wt = linalg::eigh_jacobi(pair.wt).min_eigenvalue();
    const auto diff_eig = linalg::eigh_jacobi(pair.wt - pair.w);
    const double scale =
        std::max(std::abs(diff_eig.min_eigenvalue()), std::abs(diff_eig.max_eigenvalue()));
    try {
        pair.lambda_min_nonzero_diff = diff_eig.min_nonzero_eigenvalue(tol * std::max(1.0, scale));
    } catch (const Error&) {
        pair.lambda_min_nonzero_diff = 0.0;  // Wt == W, degenerate pair
    }
    pair.spectral_gap = dgd_spectral_gap(pair.w);
    return pair;
}

}  // namespace extra::mixing
