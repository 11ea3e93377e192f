#pragma once

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "extra/error.hpp"
#include "extra/graph.hpp"
#include "extra/mixing.hpp"
#include "extra/objectives.hpp"
#include "extra/solvers.hpp"

namespace extra::netsim {

using linalg::DenseMatrix;
using objectives::Vector;
using std::size_t;

/// A neighbor's broadcast for one round: the sender id and its current row.
struct RoundMessage {
    size_t sender = 0;
    Vector payload;
};

class ProtocolViolation : public Error {
public:
    explicit ProtocolViolation(const std::string& what) : Error(what) {}
};

struct TranscriptEntry {
    long round = 0;
    size_t sender = 0;
    size_t receiver = 0;
    Vector payload;

    friend bool operator==(const TranscriptEntry& a, const TranscriptEntry& b) {
        return a.round == b.round && a.sender == b.sender && a.receiver == b.receiver &&
               a.payload == b.payload;
    }
};

struct Instrumentation {
    long rounds = 0;
    long messages_delivered = 0;
    long non_neighbor_read_attempts = 0;
};

/// One agent of the synchronous executor. It owns only its id, its sorted
/// neighbor list, the weight entries for its neighborhood, its private
/// objective, and its own two-iterate state; everything else arrives as
/// messages.
class AgentNode {
public:
    AgentNode(size_t id, std::vector<size_t> neighbors,
              std::vector<std::pair<size_t, double>> w_row,
              std::vector<std::pair<size_t, double>> wt_row,
              const objectives::AgentObjective* objective, Vector x0)
        : id_(id),
          neighbors_(std::move(neighbors)),
          w_row_(std::move(w_row)),
          wt_row_(std::move(wt_row)),
          objective_(objective),
          x_curr_(std::move(x0)) {
        for (const auto& [j, w] : w_row_) check_local(j);
        for (const auto& [j, w] : wt_row_) check_local(j);
    }

    size_t id() const { return id_; }
    const Vector& state() const { return x_curr_; }

    /// Accepts one neighbor broadcast for the current round. A sender
    /// outside the neighborhood is a protocol violation.
    void receive(const RoundMessage& msg, Instrumentation& instr) {
        if (!std::binary_search(neighbors_.begin(), neighbors_.end(), msg.sender)) {
            ++instr.non_neighbor_read_attempts;
            throw ProtocolViolation("agent " + std::to_string(id_) +
                                    " received a message from non-neighbor " +
                                    std::to_string(msg.sender));
        }
        inbox_.push_back(msg);
        ++instr.messages_delivered;
    }

    /// First update: x^1 = sum_j w_ij x_j^0 - alpha grad f_i(x_i^0).
    void compute_first(double alpha) {
        const Vector wsum = weighted_sum(w_row_, inbox_, x_curr_);
        grad_prev_ = objective_->grad(x_curr_);
        Vector next(wsum.size());
        for (size_t c = 0; c < next.size(); ++c) next[c] = wsum[c] - alpha * grad_prev_[c];
        advance(std::move(next));
    }

    /// Main update: x^{k+2} = x^{k+1} + sum w_ij x_j^{k+1}
    ///   - sum wt_ij x_j^k - alpha [grad f_i(x^{k+1}) - grad f_i(x^k)].
    /// Uses this round's inbox for the w-sum and the previous round's for
    /// the wt-sum; the gradient is evaluated once and reused next round.
    void compute_main(double alpha) {
        const Vector wsum = weighted_sum(w_row_, inbox_, x_curr_);
        const Vector wtsum = weighted_sum(wt_row_, prev_inbox_, x_prev_);
        const Vector grad_curr = objective_->grad(x_curr_);
        Vector next(wsum.size());
        for (size_t c = 0; c < next.size(); ++c)
            next[c] = x_curr_[c] + wsum[c] - wtsum[c] - alpha * (grad_curr[c] - grad_prev_[c]);
        grad_prev_ = grad_curr;
        advance(std::move(next));
    }

    /// Plain diffusion update: x^{k+1} = sum w_ij x_j^k - alpha grad f_i.
    void compute_dgd(double alpha) {
        const Vector wsum = weighted_sum(w_row_, inbox_, x_curr_);
        const Vector grad = objective_->grad(x_curr_);
        Vector next(wsum.size());
        for (size_t c = 0; c < next.size(); ++c) next[c] = wsum[c] - alpha * grad[c];
        advance(std::move(next));
    }

private:
    void check_local(size_t j) const {
        if (j != id_ && !std::binary_search(neighbors_.begin(), neighbors_.end(), j))
            throw ProtocolViolation("agent " + std::to_string(id_) +
                                    " was given a weight for non-neighbor " + std::to_string(j));
    }

    /// Weighted neighborhood sum folded in ascending sender id, skipping
    /// zero weights; own state substitutes for the self entry. Matches the
    /// matrix-form product bit for bit.
    Vector weighted_sum(const std::vector<std::pair<size_t, double>>& row,
                        const std::vector<RoundMessage>& inbox, const Vector& own) const {
        Vector acc(own.size(), 0.0);
        for (const auto& [j, w] : row) {
            if (w == 0.0) continue;
            const Vector* source = nullptr;
            if (j == id_) {
                source = &own;
            } else {
                for (const auto& msg : inbox) {
                    if (msg.sender == j) {
                        source = &msg.payload;
                        break;
                    }
                }
                if (source == nullptr)
                    throw ProtocolViolation("agent " + std::to_string(id_) +
                                            " missing round message from neighbor " +
                                            std::to_string(j));
            }
            for (size_t c = 0; c < acc.size(); ++c) acc[c] += w * (*source)[c];
        }
        return acc;
    }

    void advance(Vector next) {
        for (double v : next) {
            if (!std::isfinite(v))
                throw DivergenceError("agent " + std::to_string(id_) + " state is non-finite", 0);
        }
        x_prev_ = std::move(x_curr_);
        x_curr_ = std::move(next);
        prev_inbox_ = std::move(inbox_);
        inbox_.clear();
    }

    size_t id_;
    std::vector<size_t> neighbors_;
    std::vector<std::pair<size_t, double>> w_row_;
    std::vector<std::pair<size_t, double>> wt_row_;
    const objectives::AgentObjective* objective_;
    Vector x_curr_;
    Vector x_prev_;
    Vector grad_prev_;
    std::vector<RoundMessage> inbox_;
    std::vector<RoundMessage> prev_inbox_;
};

struct NetRunResult {
    /// Stack snapshots x^0 .. x^rounds assembled after each barrier.
    std::vector<DenseMatrix> iterates;
    Instrumentation instrumentation;
    std::vector<TranscriptEntry> transcript;
};

/// Total directed payloads for a full run: one per edge direction per round.
inline long message_count(const graph::Graph& g, long rounds) {
    if (rounds < 0) throw Error("message_count: negative round count");
    return 2 * static_cast<long>(g.edge_count()) * rounds;
}

/// Runs the synchronous message-passing executor. Rounds are barrier
/// synchronized: every broadcast of round k is delivered before any agent
/// computes, and each agent folds messages in ascending sender id, so the
/// trajectory reproduces the matrix-form solver exactly.
inline NetRunResult run_rounds(const graph::Graph& g, const mixing::MixingPair& pair,
                               const objectives::StackedObjective& obj,
                               solvers::SolverKind algo, double alpha, long rounds,
                               const DenseMatrix& x0, bool record_transcript = false) {
    const size_t n = g.agent_count();
    if (obj.agent_count() != n) throw DimensionError("run_rounds: objective/graph size mismatch");
    if (!pair.report.decentralized)
        throw ProtocolViolation("run_rounds: mixing weights leak outside the graph pattern");
    const size_t p = obj.dim();
    if (x0.rows() != n || x0.cols() != p) throw DimensionError("run_rounds: x0 shape mismatch");

    NetRunResult result;
    std::vector<AgentNode> agents;
    agents.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        std::vector<std::pair<size_t, double>> w_row, wt_row;
        for (size_t j : g.neighbors(i)) {
            w_row.push_back({j, pair.w(i, j)});
            wt_row.push_back({j, pair.wt(i, j)});
        }
        w_row.push_back({i, pair.w(i, i)});
        wt_row.push_back({i, pair.wt(i, i)});
        std::sort(w_row.begin(), w_row.end());
        std::sort(wt_row.begin(), wt_row.end());
        std::vector<size_t> nbrs = g.neighbors(i);
        Vector start(x0.row(i).begin(), x0.row(i).end());
        agents.emplace_back(i, std::move(nbrs), std::move(w_row), std::move(wt_row),
                            &obj.agent(i), std::move(start));
    }

    auto snapshot = [&]() {
        DenseMatrix x(n, p);
        for (size_t i = 0; i < n; ++i) {
            const Vector& row = agents[i].state();
            for (size_t c = 0; c < p; ++c) x(i, c) = row[c];
        }
        result.iterates.push_back(std::move(x));
    };
    snapshot();

    for (long round = 1; round <= rounds; ++round) {
        // Broadcast phase: every agent's current row crosses each incident
        // edge once per direction.
        for (size_t receiver = 0; receiver < n; ++receiver) {
            for (size_t sender : g.neighbors(receiver)) {
                RoundMessage msg{sender, Vector(agents[sender].state().begin(),
                                                agents[sender].state().end())};
                if (record_transcript)
                    result.transcript.push_back({round, sender, receiver, msg.payload});
                agents[receiver].receive(msg, result.instrumentation);
            }
        }
        // Barrier: all messages in, now everyone computes.
        for (auto& agent : agents) {
            if (algo == solvers::SolverKind::dgd)
                agent.compute_dgd(alpha);
            else if (round == 1)
                agent.compute_first(alpha);
            else
                agent.compute_main(alpha);
        }
        ++result.instrumentation.rounds;
        snapshot();
    }
    return result;
}

/// Transcript dump: one "round,sender,receiver,v0,v1,..." line per message.
inline void write_transcript_csv(std::ostream& out,
                                 const std::vector<TranscriptEntry>& transcript) {
    out << "round,sender,receiver,payload\n";
    for (const auto& e : transcript) {
        out << e.round << ',' << e.sender << ',' << e.receiver;
        char buf[32];
        for (double v : e.payload) {
            std::snprintf(buf, sizeof(buf), "%.17g", v);
            out << ',' << buf;
        }
        out << '\n';
    }
}

}  // namespace extra::netsim
