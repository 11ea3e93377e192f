#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "extra/error.hpp"

namespace extra::linalg {

using std::size_t;

/// Dense row-major matrix of doubles. Rows of an n x p instance hold the
/// per-agent variable copies, so row views are handed out as spans.
class DenseMatrix {
public:
    DenseMatrix() = default;

    DenseMatrix(size_t rows, size_t cols)
        : rows_(rows), cols_(cols), entries_(rows * cols, 0.0) {
        if (rows == 0 || cols == 0) throw DimensionError("matrix dimensions must be positive");
    }

    DenseMatrix(size_t rows, size_t cols, std::vector<double> entries)
        : rows_(rows), cols_(cols), entries_(std::move(entries)) {
        if (rows == 0 || cols == 0) throw DimensionError("matrix dimensions must be positive");
        if (entries_.size() != rows * cols) throw DimensionError("entry count does not match dimensions");
    }

    size_t rows() const { return rows_; }
    size_t cols() const { return cols_; }

    double& operator()(size_t i, size_t j) { return entries_[i * cols_ + j]; }
    double operator()(size_t i, size_t j) const { return entries_[i * cols_ + j]; }

    std::span<double> row(size_t i) { return {entries_.data() + i * cols_, cols_}; }
    std::span<const double> row(size_t i) const { return {entries_.data() + i * cols_, cols_}; }

    const std::vector<double>& data() const { return entries_; }
    std::vector<double>& data() { return entries_; }

    double frobenius_norm() const { return std::sqrt(frobenius_norm_sq()); }

    double frobenius_norm_sq() const {
        double s = 0.0;
        for (double v : entries_) s += v * v;
        return s;
    }

    bool all_finite() const {
        for (double v : entries_) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    }

    DenseMatrix& operator+=(const DenseMatrix& other) {
        check_same_shape(other);
        for (size_t i = 0; i < entries_.size(); ++i) entries_[i] += other.entries_[i];
        return *this;
    }

    DenseMatrix& operator-=(const DenseMatrix& other) {
        check_same_shape(other);
        for (size_t i = 0; i < entries_.size(); ++i) entries_[i] -= other.entries_[i];
        return *this;
    }

    DenseMatrix& operator*=(double s) {
        for (double& v : entries_) v *= s;
        return *this;
    }

    friend DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b) { return a += b; }
    friend DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b) { return a -= b; }
    friend DenseMatrix operator*(double s, DenseMatrix a) { return a *= s; }

private:
    void check_same_shape(const DenseMatrix& other) const {
        if (rows_ != other.rows_ || cols_ != other.cols_)
            throw DimensionError("matrix shapes do not conform");
    }

    size_t rows_ = 0;
    size_t cols_ = 0;
    std::vector<double> entries_;
};

/// Symmetric n x n matrix. Only the lower triangle is stored, so symmetry
/// is exact by construction.
class SymMatrix {
public:
    SymMatrix() = default;

    explicit SymMatrix(size_t n) : n_(n), tri_(n * (n + 1) / 2, 0.0) {
        if (n == 0) throw DimensionError("matrix dimension must be positive");
    }

    static SymMatrix identity(size_t n) {
        SymMatrix s(n);
        for (size_t i = 0; i < n; ++i) s.set(i, i, 1.0);
        return s;
    }

    /// Builds from a full square matrix, averaging the two triangles.
    /// Rejects inputs whose asymmetry exceeds `tol` (absolute).
    static SymMatrix from_dense(const DenseMatrix& a, double tol = 1e-12) {
        if (a.rows() != a.cols()) throw DimensionError("symmetric matrix must be square");
        SymMatrix s(a.rows());
        for (size_t i = 0; i < a.rows(); ++i) {
            for (size_t j = 0; j <= i; ++j) {
                if (std::abs(a(i, j) - a(j, i)) > tol)
                    throw DimensionError("matrix is not symmetric within tolerance");
                s.set(i, j, 0.5 * (a(i, j) + a(j, i)));
            }
        }
        return s;
    }

    size_t size() const { return n_; }

    double operator()(size_t i, size_t j) const {
        return i >= j ? tri_[i * (i + 1) / 2 + j] : tri_[j * (j + 1) / 2 + i];
    }

    void set(size_t i, size_t j, double v) {
        if (i >= j)
            tri_[i * (i + 1) / 2 + j] = v;
        else
            tri_[j * (j + 1) / 2 + i] = v;
    }

    DenseMatrix to_dense() const {
        DenseMatrix a(n_, n_);
        for (size_t i = 0; i < n_; ++i)
            for (size_t j = 0; j < n_; ++j) a(i, j) = (*this)(i, j);
        return a;
    }

    double frobenius_norm() const {
        double s = 0.0;
        for (size_t i = 0; i < n_; ++i) {
            for (size_t j = 0; j <= i; ++j) {
                const double v = (*this)(i, j);
                s += (i == j ? 1.0 : 2.0) * v * v;
            }
        }
        return std::sqrt(s);
    }

    SymMatrix& operator+=(const SymMatrix& other) {
        check_same_size(other);
        for (size_t i = 0; i < tri_.size(); ++i) tri_[i] += other.tri_[i];
        return *this;
    }

    SymMatrix& operator-=(const SymMatrix& other) {
        check_same_size(other);
        for (size_t i = 0; i < tri_.size(); ++i) tri_[i] -= other.tri_[i];
        return *this;
    }

    SymMatrix& operator*=(double s) {
        for (double& v : tri_) v *= s;
        return *this;
    }

    friend SymMatrix operator+(SymMatrix a, const SymMatrix& b) { return a += b; }
    friend SymMatrix operator-(SymMatrix a, const SymMatrix& b) { return a -= b; }
    friend SymMatrix operator*(double s, SymMatrix a) { return a *= s; }

private:
    void check_same_size(const SymMatrix& other) const {
        if (n_ != other.n_) throw DimensionError("matrix sizes do not conform");
    }

    size_t n_ = 0;
    std::vector<double> tri_;
};

/// S * X for symmetric S. Column j of row i accumulates in ascending index
/// order and zero weights are skipped, so the floating-point op sequence is
/// identical to a per-agent neighbor sum over the sparsity pattern of S.
inline DenseMatrix mul(const SymMatrix& s, const DenseMatrix& x) {
    if (s.size() != x.rows()) throw DimensionError("mul: dimensions do not conform");
    DenseMatrix out(x.rows(), x.cols());
    for (size_t i = 0; i < x.rows(); ++i) {
        auto dst = out.row(i);
        for (size_t j = 0; j < x.rows(); ++j) {
            const double w = s(i, j);
            if (w == 0.0) continue;
            auto src = x.row(j);
            for (size_t c = 0; c < x.cols(); ++c) dst[c] += w * src[c];
        }
    }
    return out;
}

inline DenseMatrix mul(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.rows()) throw DimensionError("mul: dimensions do not conform");
    DenseMatrix out(a.rows(), b.cols());
    for (size_t i = 0; i < a.rows(); ++i) {
        for (size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
        }
    }
    return out;
}

inline DenseMatrix transpose(const DenseMatrix& a) {
    DenseMatrix t(a.cols(), a.rows());
    for (size_t i = 0; i < a.rows(); ++i)
        for (size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

/// A^T * A condensed straight into symmetric storage.
inline SymMatrix gram(const DenseMatrix& a) {
    SymMatrix g(a.cols());
    for (size_t i = 0; i < a.cols(); ++i) {
        for (size_t j = 0; j <= i; ++j) {
            double s = 0.0;
            for (size_t k = 0; k < a.rows(); ++k) s += a(k, i) * a(k, j);
            g.set(i, j, s);
        }
    }
    return g;
}

/// Eigendecomposition of a symmetric matrix: S = V diag(values) V^T with
/// eigenvalues ascending and orthonormal eigenvector columns.
struct EigDecomposition {
    std::vector<double> eigenvalues;
    DenseMatrix eigenvectors;

    double min_eigenvalue() const { return eigenvalues.front(); }
    double max_eigenvalue() const { return eigenvalues.back(); }

    /// Smallest eigenvalue with |lambda| above `zero_tol`. Throws if all
    /// eigenvalues are treated as zero.
    double min_nonzero_eigenvalue(double zero_tol) const {
        for (double v : eigenvalues) {
            if (std::abs(v) > zero_tol) return v;
        }
        throw Error("matrix has no nonzero eigenvalue above threshold");
    }
};

namespace detail {

inline double off_diagonal_norm(const DenseMatrix& a) {
    double s = 0.0;
    for (size_t i = 0; i < a.rows(); ++i)
        for (size_t j = 0; j < a.cols(); ++j)
            if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
}

}  // namespace detail

/// Cyclic Jacobi eigensolver for dense symmetric matrices. Sweeps until the
/// off-diagonal Frobenius norm drops below 1e-13 * ||S||_F, at most 50
/// sweeps. Intended for the small dense matrices this library works with
/// (a few hundred rows at most).
inline EigDecomposition eigh_jacobi(const SymMatrix& sym) {
    const size_t n = sym.size();
    DenseMatrix a = sym.to_dense();
    DenseMatrix v(n, n);
    for (size_t i = 0; i < n; ++i) v(i, i) = 1.0;

    const double threshold = 1e-13 * sym.frobenius_norm();
    constexpr int kMaxSweeps = 50;

    int sweep = 0;
    while (detail::off_diagonal_norm(a) > threshold) {
        if (++sweep > kMaxSweeps)
            throw Error("eigh_jacobi: no convergence after " + std::to_string(kMaxSweeps) + " sweeps");
        for (size_t p = 0; p + 1 < n; ++p) {
            for (size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double app = a(p, p);
                const double aqq = a(q, q);
                // Classic two-sided rotation choosing the smaller angle.
                const double theta = 0.5 * (aqq - app) / apq;
                double t = 1.0 / (std::abs(theta) + std::sqrt(1.0 + theta * theta));
                if (theta < 0.0) t = -t;
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                const double tau = s / (1.0 + c);

                a(p, p) = app - t * apq;
                a(q, q) = aqq + t * apq;
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                for (size_t k = 0; k < n; ++k) {
                    if (k != p && k != q) {
                        const double akp = a(k, p);
                        const double akq = a(k, q);
                        a(k, p) = akp - s * (akq + tau * akp);
                        a(p, k) = a(k, p);
                        a(k, q) = akq + s * (akp - tau * akq);
                        a(q, k) = a(k, q);
                    }
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = vkp - s * (vkq + tau * vkp);
                    v(k, q) = vkq + s * (vkp - tau * vkq);
                }
            }
        }
    }

    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(),
              [&](size_t x, size_t y) { return a(x, x) < a(y, y); });

    EigDecomposition out;
    out.eigenvalues.resize(n);
    out.eigenvectors = DenseMatrix(n, n);
    for (size_t j = 0; j < n; ++j) {
        out.eigenvalues[j] = a(order[j], order[j]);
        for (size_t i = 0; i < n; ++i) out.eigenvectors(i, j) = v(i, order[j]);
    }
    return out;
}

/// Symmetric PSD square root via the eigendecomposition: V sqrt(L) V^T.
/// Eigenvalues in [-tol, 0) are clamped to zero; anything below -tol means
/// the input is not positive semidefinite.
inline SymMatrix psd_sqrt(const SymMatrix& s, double tol = 1e-10) {
    const EigDecomposition eig = eigh_jacobi(s);
    const size_t n = s.size();
    std::vector<double> roots(n);
    for (size_t k = 0; k < n; ++k) {
        double lambda = eig.eigenvalues[k];
        if (lambda < -tol)
            throw NotPsdError("psd_sqrt: matrix is not PSD (eigenvalue " + std::to_string(lambda) + ")");
        if (lambda < 0.0) lambda = 0.0;
        roots[k] = std::sqrt(lambda);
    }
    SymMatrix u(n);
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = 0; j <= i; ++j) {
            double acc = 0.0;
            for (size_t k = 0; k < n; ++k)
                acc += eig.eigenvectors(i, k) * roots[k] * eig.eigenvectors(j, k);
            u.set(i, j, acc);
        }
    }
    return u;
}

/// Squared G-metric norm: trace(A^T G A). Tiny negative round-off is
/// clamped so callers can rely on a nonnegative result for PSD G.
inline double g_norm_sq(const DenseMatrix& a, const SymMatrix& g) {
    if (g.size() != a.rows()) throw DimensionError("g_norm_sq: dimensions do not conform");
    const DenseMatrix ga = mul(g, a);
    double s = 0.0;
    for (size_t i = 0; i < a.rows(); ++i)
        for (size_t j = 0; j < a.cols(); ++j) s += a(i, j) * ga(i, j);
    return s < 0.0 ? 0.0 : s;
}

/// Solves S X = B for symmetric positive definite S via Cholesky.
inline DenseMatrix solve_spd(const SymMatrix& s, const DenseMatrix& b) {
    const size_t n = s.size();
    if (b.rows() != n) throw DimensionError("solve_spd: dimensions do not conform");

    DenseMatrix l(n, n);
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = 0; j <= i; ++j) {
            double sum = s(i, j);
            for (size_t k = 0; k < j; ++k) sum -= l(i, k) * l(j, k);
            if (i == j) {
                if (sum <= 0.0) throw NotPsdError("solve_spd: matrix is not SPD");
                l(i, i) = std::sqrt(sum);
            } else {
                l(i, j) = sum / l(j, j);
            }
        }
    }

    DenseMatrix x = b;
    for (size_t c = 0; c < b.cols(); ++c) {
        for (size_t i = 0; i < n; ++i) {
            double sum = x(i, c);
            for (size_t k = 0; k < i; ++k) sum -= l(i, k) * x(k, c);
            x(i, c) = sum / l(i, i);
        }
        for (size_t ii = n; ii-- > 0;) {
            double sum = x(ii, c);
            for (size_t k = ii + 1; k < n; ++k) sum -= l(k, ii) * x(k, c);
            x(ii, c) = sum / l(ii, ii);
        }
    }
    return x;
}

/// Largest eigenvalue of A^T A for an arbitrary dense A (i.e. the squared
/// spectral norm), used for Lipschitz constants of quadratic losses.
inline double spectral_norm_sq(const DenseMatrix& a) {
    return eigh_jacobi(gram(a)).max_eigenvalue();
}

}  // namespace extra::linalg
