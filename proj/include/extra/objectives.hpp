#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <memory>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "extra/error.hpp"
#include "extra/linalg.hpp"
#include "extra/rng.hpp"

namespace extra::objectives {

using linalg::DenseMatrix;
using linalg::SymMatrix;
using std::size_t;

using Vector = std::vector<double>;
using VecView = std::span<const double>;

/// One agent's private differentiable objective. Implementations are
/// immutable after construction; eval/grad are pure.
class AgentObjective {
public:
    virtual ~AgentObjective() = default;
    virtual size_t dim() const = 0;
    virtual double eval(VecView x) const = 0;
    virtual Vector grad(VecView x) const = 0;
    virtual double lipschitz() const = 0;
};

namespace detail {

inline void check_dim(const AgentObjective& f, VecView x) {
    if (x.size() != f.dim()) throw DimensionError("objective input has wrong dimension");
}

inline Vector residual(const DenseMatrix& m, const Vector& y, VecView x) {
    Vector r(m.rows());
    for (size_t i = 0; i < m.rows(); ++i) {
        double s = 0.0;
        for (size_t j = 0; j < m.cols(); ++j) s += m(i, j) * x[j];
        r[i] = s - y[i];
    }
    return r;
}

}  // namespace detail

/// 0.5 ||M x - y||^2 with gradient M^T (M x - y).
class LeastSquaresObjective final : public AgentObjective {
public:
    LeastSquaresObjective(DenseMatrix m, Vector y) : m_(std::move(m)), y_(std::move(y)) {
        if (m_.rows() != y_.size()) throw DimensionError("least_squares: row count mismatch");
        lipschitz_ = linalg::spectral_norm_sq(m_);
    }

    size_t dim() const override { return m_.cols(); }

    double eval(VecView x) const override {
        detail::check_dim(*this, x);
        const Vector r = detail::residual(m_, y_, x);
        double s = 0.0;
        for (double v : r) s += v * v;
        return 0.5 * s;
    }

    Vector grad(VecView x) const override {
        detail::check_dim(*this, x);
        const Vector r = detail::residual(m_, y_, x);
        Vector g(dim(), 0.0);
        for (size_t i = 0; i < m_.rows(); ++i)
            for (size_t j = 0; j < dim(); ++j) g[j] += m_(i, j) * r[i];
        return g;
    }

    double lipschitz() const override { return lipschitz_; }

    const DenseMatrix& measurement() const { return m_; }
    const Vector& observation() const { return y_; }

private:
    DenseMatrix m_;
    Vector y_;
    double lipschitz_;
};

/// Scalar Huber loss and its derivative: quadratic inside |a| <= xi,
/// linear outside, C^1 at the seam.
inline double huber_value(double a, double xi) {
    return std::abs(a) <= xi ? 0.5 * a * a : xi * (std::abs(a) - 0.5 * xi);
}

inline double huber_slope(double a, double xi) {
    if (std::abs(a) <= xi) return a;
    return a > 0.0 ? xi : -xi;
}

/// Row-wise Huber loss of the residual M x - y.
class HuberObjective final : public AgentObjective {
public:
    HuberObjective(DenseMatrix m, Vector y, double xi)
        : m_(std::move(m)), y_(std::move(y)), xi_(xi) {
        if (m_.rows() != y_.size()) throw DimensionError("huber: row count mismatch");
        if (!(xi > 0.0)) throw Error("huber: xi must be positive");
        lipschitz_ = linalg::spectral_norm_sq(m_);
    }

    size_t dim() const override { return m_.cols(); }

    double eval(VecView x) const override {
        detail::check_dim(*this, x);
        const Vector r = detail::residual(m_, y_, x);
        double s = 0.0;
        for (double v : r) s += huber_value(v, xi_);
        return s;
    }

    Vector grad(VecView x) const override {
        detail::check_dim(*this, x);
        const Vector r = detail::residual(m_, y_, x);
        Vector g(dim(), 0.0);
        for (size_t i = 0; i < m_.rows(); ++i) {
            const double h = huber_slope(r[i], xi_);
            for (size_t j = 0; j < dim(); ++j) g[j] += h * m_(i, j);
        }
        return g;
    }

    double lipschitz() const override { return lipschitz_; }

    double xi() const { return xi_; }

    /// True when every per-sample residual at x sits in the quadratic zone.
    bool in_quadratic_zone(VecView x) const {
        const Vector r = detail::residual(m_, y_, x);
        for (double v : r)
            if (std::abs(v) > xi_) return false;
        return true;
    }

    const DenseMatrix& measurement() const { return m_; }
    const Vector& observation() const { return y_; }

private:
    DenseMatrix m_;
    Vector y_;
    double xi_;
    double lipschitz_;
};

/// Averaged logistic loss (1/m) sum_j ln(1 + exp(-(M_j x) y_j)) with labels
/// in {-1, +1}.
class LogisticObjective final : public AgentObjective {
public:
    LogisticObjective(DenseMatrix m, Vector labels)
        : m_(std::move(m)), labels_(std::move(labels)) {
        if (m_.rows() != labels_.size()) throw DimensionError("logistic: row count mismatch");
        for (double y : labels_)
            if (y != 1.0 && y != -1.0) throw Error("logistic: labels must be -1 or +1");
        lipschitz_ = linalg::spectral_norm_sq(m_) / (4.0 * static_cast<double>(m_.rows()));
    }

    size_t dim() const override { return m_.cols(); }

    double eval(VecView x) const override {
        detail::check_dim(*this, x);
        double s = 0.0;
        for (size_t i = 0; i < m_.rows(); ++i) {
            double t = 0.0;
            for (size_t j = 0; j < dim(); ++j) t += m_(i, j) * x[j];
            t *= labels_[i];
            // ln(1 + e^{-t}) without overflow on either tail.
            s += t >= 0.0 ? std::log1p(std::exp(-t)) : -t + std::log1p(std::exp(t));
        }
        return s / static_cast<double>(m_.rows());
    }

    Vector grad(VecView x) const override {
        detail::check_dim(*this, x);
        Vector g(dim(), 0.0);
        const double inv_m = 1.0 / static_cast<double>(m_.rows());
        for (size_t i = 0; i < m_.rows(); ++i) {
            double t = 0.0;
            for (size_t j = 0; j < dim(); ++j) t += m_(i, j) * x[j];
            t *= labels_[i];
            // sigma(-t) = 1/(1 + e^t), evaluated on the stable side.
            const double sig = t >= 0.0 ? std::exp(-t) / (1.0 + std::exp(-t))
                                        : 1.0 / (1.0 + std::exp(t));
            const double coeff = -labels_[i] * sig * inv_m;
            for (size_t j = 0; j < dim(); ++j) g[j] += coeff * m_(i, j);
        }
        return g;
    }

    double lipschitz() const override { return lipschitz_; }

    const DenseMatrix& measurement() const { return m_; }
    const Vector& labels() const { return labels_; }

private:
    DenseMatrix m_;
    Vector labels_;
    double lipschitz_;
};

/// The n per-agent objectives stacked, with the aggregate Lipschitz
/// constant max_i L_i. stacked_grad calls are counted so tests can verify
/// how often solvers evaluate gradients.
class StackedObjective {
public:
    explicit StackedObjective(std::vector<std::shared_ptr<const AgentObjective>> agents)
        : agents_(std::move(agents)) {
        if (agents_.empty()) throw Error("stacked objective needs at least one agent");
        dim_ = agents_.front()->dim();
        lf_ = 0.0;
        for (const auto& a : agents_) {
            if (a->dim() != dim_) throw DimensionError("agents disagree on dimension");
            lf_ = std::max(lf_, a->lipschitz());
        }
    }

    // The gradient counter is per-instance instrumentation; copies and
    // moves start fresh.
    StackedObjective(const StackedObjective& other)
        : agents_(other.agents_), dim_(other.dim_), lf_(other.lf_) {}
    StackedObjective(StackedObjective&& other) noexcept
        : agents_(std::move(other.agents_)), dim_(other.dim_), lf_(other.lf_) {}
    StackedObjective& operator=(const StackedObjective& other) {
        agents_ = other.agents_;
        dim_ = other.dim_;
        lf_ = other.lf_;
        return *this;
    }
    StackedObjective& operator=(StackedObjective&& other) noexcept {
        agents_ = std::move(other.agents_);
        dim_ = other.dim_;
        lf_ = other.lf_;
        return *this;
    }

    size_t agent_count() const { return agents_.size(); }
    size_t dim() const { return dim_; }
    double lipschitz() const { return lf_; }
    const AgentObjective& agent(size_t i) const { return *agents_[i]; }

    /// Row i of the result is agent i's gradient at row i of x.
    DenseMatrix stacked_grad(const DenseMatrix& x) const {
        if (x.rows() != agents_.size() || x.cols() != dim_)
            throw DimensionError("stacked_grad: stack shape mismatch");
        DenseMatrix g(x.rows(), x.cols());
        for (size_t i = 0; i < agents_.size(); ++i) {
            const Vector gi = agents_[i]->grad(x.row(i));
            for (size_t j = 0; j < dim_; ++j) g(i, j) = gi[j];
        }
        grad_evals_.fetch_add(1, std::memory_order_relaxed);
        return g;
    }

    double eval_sum(const DenseMatrix& x) const {
        double s = 0.0;
        for (size_t i = 0; i < agents_.size(); ++i) s += agents_[i]->eval(x.row(i));
        return s;
    }

    /// Gradient of sum_i f_i at a single common point.
    Vector common_grad(VecView x) const {
        Vector g(dim_, 0.0);
        for (const auto& a : agents_) {
            const Vector gi = a->grad(x);
            for (size_t j = 0; j < dim_; ++j) g[j] += gi[j];
        }
        return g;
    }

    double common_eval(VecView x) const {
        double s = 0.0;
        for (const auto& a : agents_) s += a->eval(x);
        return s;
    }

    std::uint64_t stacked_grad_evals() const { return grad_evals_.load(std::memory_order_relaxed); }
    void reset_grad_counter() const { grad_evals_.store(0, std::memory_order_relaxed); }

private:
    std::vector<std::shared_ptr<const AgentObjective>> agents_;
    size_t dim_ = 0;
    double lf_ = 0.0;
    mutable std::atomic<std::uint64_t> grad_evals_{0};
};

/// Per-agent sensing data: measurement matrix M_i and observation y_i.
struct SensingData {
    std::vector<DenseMatrix> m;
    std::vector<Vector> y;

    size_t agent_count() const { return m.size(); }
};

/// One CSV row per sample: the measurement row with the observation
/// appended as the last column. One file per agent is the interchange
/// format for cross-implementation testing.
inline void write_sensing_csv(std::ostream& out, const DenseMatrix& m, const Vector& y) {
    char buf[40];
    for (size_t r = 0; r < m.rows(); ++r) {
        for (size_t c = 0; c < m.cols(); ++c) {
            std::snprintf(buf, sizeof(buf), "%.17g", m(r, c));
            out << buf << ',';
        }
        std::snprintf(buf, sizeof(buf), "%.17g", y[r]);
        out << buf << '\n';
    }
}

inline std::pair<DenseMatrix, Vector> read_sensing_csv(std::istream& in) {
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        rows.emplace_back();
        std::istringstream fields(line);
        std::string field;
        while (std::getline(fields, field, ',')) rows.back().push_back(std::stod(field));
    }
    if (rows.empty()) throw Error("sensing csv: no rows");
    const size_t cols = rows.front().size();
    if (cols < 2) throw Error("sensing csv: need at least one feature and the observation");
    DenseMatrix m(rows.size(), cols - 1);
    Vector y(rows.size());
    for (size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != cols) throw Error("sensing csv: ragged rows");
        for (size_t c = 0; c + 1 < cols; ++c) m(r, c) = rows[r][c];
        y[r] = rows[r][cols - 1];
    }
    return {std::move(m), std::move(y)};
}

/// Scales each agent's (M_i, y_i) by 1/sqrt(lambda_max(M_i^T M_i)) so every
/// per-agent quadratic-loss Lipschitz constant becomes one.
inline SensingData normalize_unit_lipschitz(SensingData data) {
    for (size_t i = 0; i < data.m.size(); ++i) {
        const double norm_sq = linalg::spectral_norm_sq(data.m[i]);
        if (!(norm_sq > 0.0)) throw Error("normalize_unit_lipschitz: zero measurement matrix");
        const double scale = 1.0 / std::sqrt(norm_sq);
        data.m[i] *= scale;
        for (double& v : data.y[i]) v *= scale;
    }
    return data;
}

inline std::shared_ptr<const AgentObjective> least_squares(DenseMatrix m, Vector y) {
    return std::make_shared<LeastSquaresObjective>(std::move(m), std::move(y));
}

inline std::shared_ptr<const AgentObjective> huber(DenseMatrix m, Vector y, double xi) {
    return std::make_shared<HuberObjective>(std::move(m), std::move(y), xi);
}

inline std::shared_ptr<const AgentObjective> logistic(DenseMatrix m, Vector labels) {
    return std::make_shared<LogisticObjective>(std::move(m), std::move(labels));
}

inline StackedObjective stack_least_squares(const SensingData& data) {
    std::vector<std::shared_ptr<const AgentObjective>> agents;
    for (size_t i = 0; i < data.agent_count(); ++i)
        agents.push_back(least_squares(data.m[i], data.y[i]));
    return StackedObjective(std::move(agents));
}

inline StackedObjective stack_huber(const SensingData& data, double xi) {
    std::vector<std::shared_ptr<const AgentObjective>> agents;
    for (size_t i = 0; i < data.agent_count(); ++i)
        agents.push_back(huber(data.m[i], data.y[i], xi));
    return StackedObjective(std::move(agents));
}

inline StackedObjective stack_logistic(const SensingData& data) {
    std::vector<std::shared_ptr<const AgentObjective>> agents;
    for (size_t i = 0; i < data.agent_count(); ++i)
        agents.push_back(logistic(data.m[i], data.y[i]));
    return StackedObjective(std::move(agents));
}

/// Synthetic sensing instance y_i = M_i x_true + e_i with standard-normal
/// M, e and x_true; x_true is stretched by signal_scale so runs start far
/// from the solution.
inline SensingData make_sensing_data(size_t n, size_t mi, size_t p, double signal_scale,
                                     std::uint64_t seed) {
    rng::Xorshift64Star gen(seed);
    Vector x_true(p);
    for (double& v : x_true) v = signal_scale * gen.next_normal();
    SensingData data;
    for (size_t i = 0; i < n; ++i) {
        DenseMatrix m(mi, p);
        for (size_t r = 0; r < mi; ++r)
            for (size_t c = 0; c < p; ++c) m(r, c) = gen.next_normal();
        Vector y(mi);
        for (size_t r = 0; r < mi; ++r) {
            double s = 0.0;
            for (size_t c = 0; c < p; ++c) s += m(r, c) * x_true[c];
            y[r] = s + gen.next_normal();
        }
        data.m.push_back(std::move(m));
        data.y.push_back(std::move(y));
    }
    return data;
}

/// Synthetic classification instance: features standard normal with the
/// last column fixed to 1 (intercept), labels sampled from the logistic
/// model of a hidden standard-normal classifier, which keeps the data
/// non-separable with overwhelming probability.
inline SensingData make_logistic_data(size_t n, size_t mi, size_t p, std::uint64_t seed) {
    rng::Xorshift64Star gen(seed);
    Vector planted(p);
    for (double& v : planted) v = gen.next_normal();
    SensingData data;
    for (size_t i = 0; i < n; ++i) {
        DenseMatrix m(mi, p);
        Vector y(mi);
        for (size_t r = 0; r < mi; ++r) {
            for (size_t c = 0; c + 1 < p; ++c) m(r, c) = gen.next_normal();
            m(r, p - 1) = 1.0;
            double t = 0.0;
            for (size_t c = 0; c < p; ++c) t += m(r, c) * planted[c];
            const double prob = 1.0 / (1.0 + std::exp(-t));
            y[r] = gen.next_double() < prob ? 1.0 : -1.0;
        }
        data.m.push_back(std::move(m));
        data.y.push_back(std::move(y));
    }
    return data;
}

/// Minimizer of sum_i f_i. Quadratic losses are solved by the global
/// normal equations; everything else runs gradient descent. The descent
/// phase takes Barzilai-Borwein trial steps with Armijo backtracking; once
/// function-value comparisons fall below double rounding it switches to a
/// fixed 1/L step, which needs no value comparisons and grinds the
/// gradient down to the representational floor.
inline Vector centralized_reference(const StackedObjective& obj, double tol = 1e-12,
                                    long max_iterations = 2000000) {
    const size_t p = obj.dim();

    bool all_least_squares = true;
    for (size_t i = 0; i < obj.agent_count(); ++i) {
        if (dynamic_cast<const LeastSquaresObjective*>(&obj.agent(i)) == nullptr) {
            all_least_squares = false;
            break;
        }
    }

    if (all_least_squares) {
        SymMatrix gram(p);
        DenseMatrix rhs(p, 1);
        for (size_t i = 0; i < obj.agent_count(); ++i) {
            const auto& ls = static_cast<const LeastSquaresObjective&>(obj.agent(i));
            const DenseMatrix& m = ls.measurement();
            gram += linalg::gram(m);
            for (size_t r = 0; r < m.rows(); ++r)
                for (size_t c = 0; c < p; ++c) rhs(c, 0) += m(r, c) * ls.observation()[r];
        }
        const DenseMatrix x = linalg::solve_spd(gram, rhs);
        Vector out(p);
        for (size_t c = 0; c < p; ++c) out[c] = x(c, 0);
        return out;
    }

    double lipschitz_sum = 0.0;
    for (size_t i = 0; i < obj.agent_count(); ++i) lipschitz_sum += obj.agent(i).lipschitz();
    lipschitz_sum = std::max(lipschitz_sum, 1e-12);

    Vector x(p, 0.0);
    Vector g = obj.common_grad(x);
    double fx = obj.common_eval(x);
    double step = 1.0 / lipschitz_sum;
    double bb = 0.0;
    long it = 0;

    auto grad_norm = [](const Vector& v) {
        double s = 0.0;
        for (double e : v) s += e * e;
        return std::sqrt(s);
    };

    // Backtracking phase.
    bool value_floor = false;
    while (it < max_iterations && !value_floor) {
        double gn2 = 0.0;
        for (double v : g) gn2 += v * v;
        if (std::sqrt(gn2) <= tol) return x;

        double trial = bb > 0.0 ? bb : 2.0 * step;
        Vector cand(p);
        for (int halvings = 0;; ++halvings) {
            for (size_t j = 0; j < p; ++j) cand[j] = x[j] - trial * g[j];
            const double ft = obj.common_eval(cand);
            if (ft <= fx - 1e-4 * trial * gn2) {
                fx = ft;
                break;
            }
            trial *= 0.5;
            if (halvings >= 60) {
                value_floor = true;  // decreases are below f's rounding noise
                break;
            }
        }
        if (value_floor) break;

        const Vector g_new = obj.common_grad(cand);
        double ss = 0.0, sy = 0.0;
        for (size_t j = 0; j < p; ++j) {
            const double sj = cand[j] - x[j];
            const double yj = g_new[j] - g[j];
            ss += sj * sj;
            sy += sj * yj;
        }
        if (ss == 0.0) {
            value_floor = true;  // step no longer moves x at double precision
            break;
        }
        bb = sy > 0.0 ? ss / sy : 0.0;
        x = std::move(cand);
        g = g_new;
        step = trial;
        ++it;
    }

    // Fixed-step polish: monotone for any L-smooth convex objective.
    const double polish = 1.0 / lipschitz_sum;
    for (; it < max_iterations; ++it) {
        if (grad_norm(g) <= tol) return x;
        for (size_t j = 0; j < p; ++j) x[j] -= polish * g[j];
        g = obj.common_grad(x);
    }
    if (grad_norm(g) <= tol) return x;
    throw Error("centralized_reference: iteration budget exhausted before tolerance");
}

}  // namespace extra::objectives
