#include <catch2/catch_amalgamated.hpp>

#include "extra/diagnostics.hpp"
#include "extra/solvers.hpp"

using namespace extra;
using namespace extra::diagnostics;
using objectives::Vector;

namespace {

struct Instance {
    graph::Graph g;
    mixing::MixingPair pair;
    objectives::StackedObjective obj;
    Vector x_star;
};

Instance path_ls(std::uint64_t seed, double scale = 1.0) {
    graph::Graph g(3, {{0, 1}, {1, 2}});
    auto w = mixing::metropolis(g, 1.0);
    auto pair = mixing::make_mixing_pair(w, mixing::wtilde_default(w), g);
    auto obj = objectives::stack_least_squares(objectives::normalize_unit_lipschitz(
        objectives::make_sensing_data(3, 2, 2, scale, seed)));
    auto x_star = objectives::centralized_reference(obj);
    return {std::move(g), std::move(pair), std::move(obj), std::move(x_star)};
}

solvers::SolverTrace run_extra(const Instance& inst, double alpha, long budget) {
    solvers::RunConfig cfg;
    cfg.kind = solvers::SolverKind::extra;
    cfg.schedule = solvers::StepSchedule::fixed(alpha);
    cfg.budget = budget;
    linalg::DenseMatrix x0(3, 2);
    return solvers::run(cfg, inst.pair, inst.obj, x0, inst.x_star);
}

/// A flat objective: eval is linear (here constant zero), curvature free.
class FlatObjective final : public objectives::AgentObjective {
public:
    explicit FlatObjective(std::size_t p) : p_(p) {}
    std::size_t dim() const override { return p_; }
    double eval(objectives::VecView) const override { return 0.0; }
    Vector grad(objectives::VecView) const override { return Vector(p_, 0.0); }
    double lipschitz() const override { return 0.0; }

private:
    std::size_t p_;
};

}  // namespace

TEST_CASE("relative_residual fixed points") {
    const Vector x_star{1.0, 2.0};
    linalg::DenseMatrix x0(3, 2);
    const auto star = consensual_stack(x_star, 3);

    CHECK(relative_residual(x0, x_star, x0) == 1.0);
    CHECK(relative_residual(star, x_star, x0) == 0.0);

    linalg::DenseMatrix mid(3, 2);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 2; ++j) mid(i, j) = 0.5 * (x0(i, j) + star(i, j));
    CHECK(relative_residual(mid, x_star, x0) == Catch::Approx(0.5));

    CHECK_THROWS_AS(relative_residual(star, x_star, star), Error);
}

TEST_CASE("consensus_violation vanishes exactly on consensual stacks") {
    const auto star = consensual_stack(Vector{3.0, -1.0}, 4);
    CHECK(consensus_violation(star) == 0.0);
    linalg::DenseMatrix x = star;
    x(2, 0) += 1.0;
    CHECK(consensus_violation(x) > 0.1);
}

TEST_CASE("tracker accumulates the running sum without drift") {
    Instance inst = path_ls(51);
    const auto u = linalg::psd_sqrt(inst.pair.wt - inst.pair.w);
    OptimalityTracker tracker(u, inst.pair.wt, 0.5, 2);

    rng::Xorshift64Star gen(3);
    std::vector<linalg::DenseMatrix> history;
    for (int t = 0; t < 10000; ++t) {
        linalg::DenseMatrix x(3, 2);
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 2; ++j) x(i, j) = gen.next_normal();
        history.push_back(x);
        tracker.update(x);
    }
    linalg::DenseMatrix fresh(3, 2);
    for (const auto& x : history) fresh += linalg::mul(u, x);
    CHECK((fresh - tracker.q()).frobenius_norm() <= 1e-10);
    CHECK(tracker.updates() == 10000);
}

TEST_CASE("optimality residuals vanish at the reference pair") {
    Instance inst = path_ls(52);
    const double alpha = 0.5;
    const auto star = consensual_stack(inst.x_star, 3);
    const auto diff_eig = linalg::eigh_jacobi(inst.pair.wt - inst.pair.w);
    const auto grad_star = inst.obj.stacked_grad(star);
    const auto q_star = q_star_reference(diff_eig, grad_star, alpha);

    // Feed the tracker so its q equals q*: replace the accumulated state by
    // evaluating the residual formula directly on (x*, q*).
    const auto u = linalg::psd_sqrt(inst.pair.wt - inst.pair.w);
    linalg::DenseMatrix lhs = linalg::mul(u, q_star);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 2; ++j) lhs(i, j) += alpha * grad_star(i, j);
    CHECK(linalg::g_norm_sq(lhs, inst.pair.wt) <= 1e-18);
    CHECK(linalg::mul(u, star).frobenius_norm_sq() <= 1e-18);
}

TEST_CASE("consensual but non-optimal stacks zero only the consensus residual") {
    Instance inst = path_ls(53);
    const auto u = linalg::psd_sqrt(inst.pair.wt - inst.pair.w);
    OptimalityTracker tracker(u, inst.pair.wt, 0.5, 2);
    const auto x = consensual_stack(Vector{5.0, -4.0}, 3);  // far from optimal
    tracker.update(x);
    const auto [res1, res2] = first_order_residuals(x, tracker, inst.obj);
    CHECK(res2 <= 1e-20);
    CHECK(res1 > 1e-6);
}

TEST_CASE("z_metric_distance fixed cases") {
    const auto q = consensual_stack(Vector{1.0, 1.0}, 3);
    const auto x = consensual_stack(Vector{2.0, 0.0}, 3);
    CHECK(z_metric_distance(x, q, x, q, linalg::SymMatrix::identity(3)) == 0.0);

    // With Wt = I the metric is the plain squared Frobenius distance of the
    // concatenated blocks.
    linalg::DenseMatrix q2 = q;
    q2(0, 0) += 2.0;
    linalg::DenseMatrix x2 = x;
    x2(1, 1) -= 3.0;
    const double d = z_metric_distance(x2, q2, x, q, linalg::SymMatrix::identity(3));
    CHECK(d == Catch::Approx(4.0 + 9.0));
}

TEST_CASE("consensus violation identity under the metric square root") {
    Instance inst = path_ls(54);
    const auto u = linalg::psd_sqrt(inst.pair.wt - inst.pair.w);
    const auto diff = inst.pair.wt - inst.pair.w;
    rng::Xorshift64Star gen(8);
    for (int t = 0; t < 20; ++t) {
        linalg::DenseMatrix x(3, 2);
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 2; ++j) x(i, j) = gen.next_normal();
        const double through_u = linalg::mul(u, x).frobenius_norm_sq();
        const double through_metric = linalg::g_norm_sq(x, diff);
        CHECK(through_u == Catch::Approx(through_metric).margin(1e-10));
    }
}

TEST_CASE("contraction and ergodic checks pass along a compliant run") {
    Instance inst = path_ls(55);
    const double alpha = 0.5;  // zeta = 0.5 at lambda_min(Wt) = 1/2, Lf = 1
    const auto trace = run_extra(inst, alpha, 1000);

    const auto crep = contraction_check(trace, inst.pair.wt, alpha, inst.obj.lipschitz());
    CHECK(crep.zeta == Catch::Approx(0.5));
    CHECK_FALSE(crep.skipped);
    CHECK(crep.violations.empty());

    // The squared metric distance never increases while zeta > 0.
    for (std::size_t k = 1; k < trace.records.size(); ++k)
        CHECK(trace.records[k].z_dist_sq <=
              trace.records[k - 1].z_dist_sq + crep.slack_tolerance);

    const auto erep = ergodic_rate_check(trace, inst.pair.wt, alpha, inst.obj.lipschitz());
    CHECK(erep.passed());
    CHECK(erep.active_window > 10);
}

TEST_CASE("contraction check is skipped above the step bound") {
    Instance inst = path_ls(56);
    const auto trace = run_extra(inst, 0.5, 50);
    const auto rep = contraction_check(trace, inst.pair.wt, 2.5, inst.obj.lipschitz());
    CHECK(rep.skipped);
    CHECK(rep.zeta <= 0.0);
}

TEST_CASE("rate_fit on synthetic sequences") {
    solvers::SolverTrace trace;
    for (long k = 0; k <= 40; ++k) {
        solvers::TraceRecord rec;
        rec.k = k;
        rec.relative_residual = std::pow(2.0, -static_cast<double>(k));
        trace.records.push_back(rec);
    }
    const auto fit = rate_fit(trace, 0, 41);
    CHECK(fit.factor == Catch::Approx(0.5).epsilon(1e-12));
    CHECK(fit.r_squared == Catch::Approx(1.0).epsilon(1e-12));

    solvers::SolverTrace flat;
    for (long k = 0; k <= 10; ++k) {
        solvers::TraceRecord rec;
        rec.k = k;
        rec.relative_residual = 0.25;
        flat.records.push_back(rec);
    }
    const auto flat_fit = rate_fit(flat, 0, 11);
    CHECK(flat_fit.factor == Catch::Approx(1.0));
    CHECK(flat_fit.r_squared == Catch::Approx(1.0));

    // A zero residual truncates the window.
    solvers::SolverTrace z = trace;
    z.records[30].relative_residual = 0.0;
    const auto zfit = rate_fit(z, 0, 41);
    CHECK(zfit.window_end == 30);
}

TEST_CASE("rate_fit reports the huber phase boundary from the zone flags") {
    solvers::SolverTrace trace;
    for (long k = 0; k <= 20; ++k) {
        solvers::TraceRecord rec;
        rec.k = k;
        rec.relative_residual = 1.0 / (1.0 + static_cast<double>(k));
        rec.in_quadratic_zone = k >= 12;
        trace.records.push_back(rec);
    }
    CHECK(rate_fit(trace, 0, 21).phase_boundary == 12);
}

TEST_CASE("strongly convex ratio bounds the rsc probe from below") {
    // Five agents, each 0.5 mu |x - c|^2 with mu = 2, via sqrt(mu) I rows.
    const double mu = 2.0;
    std::vector<std::shared_ptr<const objectives::AgentObjective>> agents;
    for (int i = 0; i < 5; ++i) {
        linalg::DenseMatrix m(2, 2);
        m(0, 0) = m(1, 1) = std::sqrt(mu);
        agents.push_back(objectives::least_squares(m, Vector{double(i), -double(i)}));
    }
    objectives::StackedObjective obj(std::move(agents));
    const auto x_star = objectives::centralized_reference(obj);
    const auto star = consensual_stack(x_star, 5);

    // Wt = W removes the penalty; consensual samples reduce to the plain
    // strong-convexity inequality.
    graph::Graph g = graph::random_connected(5, 0.9, 3);
    const auto w = mixing::metropolis(g, 1.0);
    for (int t = 0; t < 10; ++t) {
        const auto x = consensual_stack(Vector{1.0 + t, -2.0 * t}, 5);
        const double ratio = rsc_ratio(obj, w, w, 0.5, star, x);
        CHECK(ratio >= mu - 1e-8);
        CHECK(ratio <= mu + 1e-8);
    }
}

TEST_CASE("a curvature-free objective yields ratio zero on consensual samples") {
    std::vector<std::shared_ptr<const objectives::AgentObjective>> agents;
    for (int i = 0; i < 4; ++i) agents.push_back(std::make_shared<FlatObjective>(2));
    objectives::StackedObjective obj(std::move(agents));

    graph::Graph g = graph::random_connected(4, 0.9, 5);
    const auto w = mixing::metropolis(g, 1.0);
    const auto wt = mixing::wtilde_default(w);
    const auto star = consensual_stack(Vector{0.0, 0.0}, 4);
    // Consensual offsets live in null(Wt - W), so the penalty contributes
    // nothing and flat objectives leave no curvature.
    const auto x = consensual_stack(Vector{3.0, 4.0}, 4);
    CHECK(rsc_ratio(obj, wt, w, 0.5, star, x) == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("rsc_probe returns a positive constant on a strongly convex instance") {
    Instance inst = path_ls(57);
    const auto star = consensual_stack(inst.x_star, 3);
    const double alpha = 0.5;
    const double mu = rsc_probe(inst.obj, inst.pair.wt, inst.pair.w, alpha, star, 200, 99);
    CHECK(mu > 0.0);
    CHECK_THROWS_AS(rsc_ratio(inst.obj, inst.pair.wt, inst.pair.w, alpha, star, star), Error);
}
