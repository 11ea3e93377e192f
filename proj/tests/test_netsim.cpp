#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "extra/netsim.hpp"

using namespace extra;
using namespace extra::netsim;
using objectives::Vector;

namespace {

struct Instance {
    graph::Graph g;
    mixing::MixingPair pair;
    objectives::StackedObjective obj;
};

Instance make_instance(std::size_t n, double r, std::uint64_t seed, std::size_t p = 3) {
    graph::Graph g = n == 3 ? graph::Graph(3, {{0, 1}, {1, 2}})
                            : graph::random_connected(n, r, seed);
    auto w = mixing::metropolis(g, 1.0);
    auto pair = mixing::make_mixing_pair(w, mixing::wtilde_default(w), g);
    auto obj = objectives::stack_least_squares(objectives::normalize_unit_lipschitz(
        objectives::make_sensing_data(n, 2, p, 1.0, seed + 5)));
    return {std::move(g), std::move(pair), std::move(obj)};
}

bool stacks_identical(const linalg::DenseMatrix& a, const linalg::DenseMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            if (a(i, j) != b(i, j)) return false;
    return true;
}

}  // namespace

TEST_CASE("single agent matches the scalar recursion") {
    graph::Graph g(1, {});
    auto w = linalg::SymMatrix::identity(1);
    auto pair = mixing::make_mixing_pair(w, w, g);
    linalg::DenseMatrix m(1, 1);
    m(0, 0) = 1.0;
    objectives::StackedObjective obj({objectives::least_squares(m, Vector{0.0})});

    linalg::DenseMatrix x0(1, 1);
    x0(0, 0) = 1.0;
    const auto result = run_rounds(g, pair, obj, solvers::SolverKind::extra, 0.5, 3, x0);
    REQUIRE(result.iterates.size() == 4);
    CHECK(result.iterates[1](0, 0) == 0.5);
    CHECK(result.iterates[2](0, 0) == 0.25);
    CHECK(result.iterates[3](0, 0) == 0.125);
}

TEST_CASE("agent-form and matrix-form trajectories are bitwise identical") {
    for (auto [n, seed] : std::vector<std::pair<std::size_t, std::uint64_t>>{
             {3, 1}, {7, 2}, {10, 3}}) {
        Instance inst = make_instance(n, 0.5, seed);
        linalg::DenseMatrix x0(n, 3);

        const auto net = run_rounds(inst.g, inst.pair, inst.obj,
                                    solvers::SolverKind::extra, 0.4, 100, x0);
        solvers::ExtraState s = solvers::extra_init(x0, inst.pair.w, 0.4, inst.obj);
        CHECK(stacks_identical(net.iterates[1], s.x_curr));
        for (long k = 2; k <= 100; ++k) {
            solvers::extra_step(s, inst.pair.w, inst.pair.wt, inst.obj);
            REQUIRE(stacks_identical(net.iterates[static_cast<std::size_t>(k)], s.x_curr));
        }
        CHECK(net.instrumentation.non_neighbor_read_attempts == 0);
        CHECK(net.instrumentation.messages_delivered == message_count(inst.g, 100));
    }
}

TEST_CASE("agent-form diffusion matches matrix-form dgd steps bitwise") {
    Instance inst = make_instance(6, 0.6, 9);
    linalg::DenseMatrix x0(6, 3);
    const auto net = run_rounds(inst.g, inst.pair, inst.obj,
                                solvers::SolverKind::dgd, 0.3, 50, x0);
    linalg::DenseMatrix x = x0;
    for (long k = 1; k <= 50; ++k) {
        x = solvers::dgd_step(x, inst.pair.w, 0.3, inst.obj);
        REQUIRE(stacks_identical(net.iterates[static_cast<std::size_t>(k)], x));
    }
}

TEST_CASE("message accounting matches two payloads per edge per round") {
    const graph::Graph path(3, {{0, 1}, {1, 2}});
    CHECK(message_count(path, 10) == 40);
    CHECK(message_count(path, 0) == 0);

    const graph::Graph complete4(4, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}});
    CHECK(message_count(complete4, 1) == 12);
    CHECK_THROWS_AS(message_count(path, -1), Error);
}

TEST_CASE("a message from a non-neighbor is a protocol violation") {
    AgentNode node(0, {1, 2}, {{0, 0.5}, {1, 0.25}, {2, 0.25}}, {{0, 0.75}, {1, 0.125}, {2, 0.125}},
                   nullptr, Vector{0.0});
    Instrumentation instr;
    node.receive({1, Vector{1.0}}, instr);
    CHECK(instr.messages_delivered == 1);
    CHECK_THROWS_AS(node.receive({3, Vector{2.0}}, instr), ProtocolViolation);
    CHECK(instr.non_neighbor_read_attempts == 1);

    // Weights outside the neighborhood are rejected at construction.
    CHECK_THROWS_AS(AgentNode(0, {1}, {{0, 0.5}, {3, 0.5}}, {{0, 1.0}}, nullptr, Vector{0.0}),
                    ProtocolViolation);
}

TEST_CASE("identical scenarios produce identical transcripts") {
    Instance inst = make_instance(5, 0.7, 21);
    linalg::DenseMatrix x0(5, 3);
    const auto a = run_rounds(inst.g, inst.pair, inst.obj, solvers::SolverKind::extra,
                              0.4, 12, x0, true);
    const auto b = run_rounds(inst.g, inst.pair, inst.obj, solvers::SolverKind::extra,
                              0.4, 12, x0, true);
    REQUIRE(a.transcript.size() == b.transcript.size());
    CHECK(a.transcript == b.transcript);
    CHECK(a.transcript.size() == static_cast<std::size_t>(message_count(inst.g, 12)));
}

TEST_CASE("transcript csv lists one line per message") {
    Instance inst = make_instance(4, 0.9, 31, 2);
    linalg::DenseMatrix x0(4, 2);
    const auto result = run_rounds(inst.g, inst.pair, inst.obj, solvers::SolverKind::dgd,
                                   0.2, 2, x0, true);
    std::ostringstream out;
    write_transcript_csv(out, result.transcript);
    const std::string text = out.str();
    std::size_t lines = 0;
    for (char c : text)
        if (c == '\n') ++lines;
    CHECK(lines == result.transcript.size() + 1);  // header included
}
