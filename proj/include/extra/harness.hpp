#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "extra/diagnostics.hpp"
#include "extra/graph.hpp"
#include "extra/mixing.hpp"
#include "extra/netsim.hpp"
#include "extra/objectives.hpp"
#include "extra/solvers.hpp"

#include "json.hpp"

namespace extra::harness {

using objectives::Vector;
using std::size_t;

enum class MixingStrategy { metropolis, laplacian };
enum class WtildeChoice { standard, overshoot };
enum class ObjectiveFamily { least_squares, huber, logistic };

/// One solver entry of a scenario. `alpha_text` keeps the configured step
/// verbatim; "auto" resolves to 0.9x the fixed-step bound at run time.
struct SolverSpec {
    solvers::SolverKind kind = solvers::SolverKind::extra;
    solvers::ScheduleKind schedule = solvers::ScheduleKind::fixed;
    double exponent = 0.0;  // for power decay: 1/3 or 1/2
    std::string alpha_text = "auto";

    std::string label() const;
};

/// Full experiment description; everything a run needs, so that one config
/// plus its seeds reproduces the artifact byte for byte.
struct Scenario {
    std::string name;
    size_t graph_n = 0;
    double graph_r = 0.0;
    std::uint64_t graph_seed = 0;
    MixingStrategy strategy = MixingStrategy::metropolis;
    double eps = 1.0;
    std::optional<double> tau;  // empty = max degree + 1
    WtildeChoice wtilde = WtildeChoice::standard;
    ObjectiveFamily family = ObjectiveFamily::least_squares;
    std::uint64_t data_seed = 0;
    size_t samples_per_agent = 1;
    size_t dim = 1;
    double signal_scale = 50.0;
    double xi = 2.0;
    bool normalize = true;
    long budget = 1000;
    double stop = 0.0;
    long thin = 1;
    double reference_tol = 1e-12;
    bool override_assumptions = false;
    std::vector<SolverSpec> solvers;
};

inline std::string SolverSpec::label() const {
    std::string algo = kind == solvers::SolverKind::extra ? "extra" : "dgd";
    std::string sched = schedule == solvers::ScheduleKind::fixed
                            ? "fixed"
                            : (exponent < 0.4 ? "decay13" : "decay12");
    return algo + "-" + sched + "-" + alpha_text;
}

namespace detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split_ws(const std::string& s) {
    std::istringstream in(s);
    std::vector<std::string> out;
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

inline SolverSpec parse_solver_spec(const std::string& text) {
    const auto parts = detail::split_ws(text);
    if (parts.size() != 3)
        throw Error("solver spec needs three fields (algo schedule alpha): " + text);
    SolverSpec spec;
    if (parts[0] == "extra")
        spec.kind = solvers::SolverKind::extra;
    else if (parts[0] == "dgd")
        spec.kind = solvers::SolverKind::dgd;
    else
        throw Error("unknown solver algorithm: " + parts[0]);
    if (parts[1] == "fixed") {
        spec.schedule = solvers::ScheduleKind::fixed;
    } else if (parts[1] == "decay13") {
        spec.schedule = solvers::ScheduleKind::power_decay;
        spec.exponent = 1.0 / 3.0;
    } else if (parts[1] == "decay12") {
        spec.schedule = solvers::ScheduleKind::power_decay;
        spec.exponent = 0.5;
    } else {
        throw Error("unknown step schedule: " + parts[1]);
    }
    spec.alpha_text = parts[2];
    if (spec.alpha_text != "auto") {
        try {
            if (!(std::stod(spec.alpha_text) > 0.0)) throw Error("");
        } catch (...) {
            throw Error("solver step size must be positive or 'auto': " + parts[2]);
        }
    }
    return spec;
}

/// Parses the key = value scenario format. Unknown keys are rejected;
/// missing optional keys take documented defaults.
inline Scenario parse_scenario(std::istream& in) {
    std::map<std::string, std::string> kv;
    std::vector<std::string> solver_lines;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw Error("config line is not key = value: " + line);
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key == "solver") {
            solver_lines.push_back(value);
        } else {
            if (kv.count(key)) throw Error("duplicate config key: " + key);
            kv[key] = value;
        }
    }

    auto take = [&](const std::string& key) -> std::optional<std::string> {
        auto it = kv.find(key);
        if (it == kv.end()) return std::nullopt;
        std::string v = it->second;
        kv.erase(it);
        return v;
    };
    auto require = [&](const std::string& key) {
        auto v = take(key);
        if (!v) throw Error("missing required config key: " + key);
        return *v;
    };

    Scenario s;
    s.name = require("name");
    s.graph_n = std::stoul(require("graph.n"));
    s.graph_r = std::stod(require("graph.r"));
    s.graph_seed = std::stoull(require("graph.seed"));

    const std::string strategy = take("mixing.strategy").value_or("metropolis");
    if (strategy == "metropolis")
        s.strategy = MixingStrategy::metropolis;
    else if (strategy == "laplacian")
        s.strategy = MixingStrategy::laplacian;
    else
        throw Error("unknown mixing strategy: " + strategy);
    s.eps = std::stod(take("mixing.eps").value_or("1"));
    if (auto tau = take("mixing.tau"); tau && *tau != "auto") s.tau = std::stod(*tau);
    const std::string wtilde = take("mixing.wtilde").value_or("default");
    if (wtilde == "default")
        s.wtilde = WtildeChoice::standard;
    else if (wtilde == "overshoot")
        s.wtilde = WtildeChoice::overshoot;
    else
        throw Error("unknown wtilde choice: " + wtilde);

    const std::string family = require("objective.family");
    if (family == "least-squares")
        s.family = ObjectiveFamily::least_squares;
    else if (family == "huber")
        s.family = ObjectiveFamily::huber;
    else if (family == "logistic")
        s.family = ObjectiveFamily::logistic;
    else
        throw Error("unknown objective family: " + family);
    s.data_seed = std::stoull(require("objective.seed"));
    s.samples_per_agent = std::stoul(require("objective.samples-per-agent"));
    s.dim = std::stoul(require("objective.dim"));
    s.signal_scale = std::stod(take("objective.signal-scale").value_or("50"));
    s.xi = std::stod(take("objective.xi").value_or("2"));
    s.normalize = take("objective.normalize").value_or(
                      s.family == ObjectiveFamily::logistic ? "false" : "true") == "true";

    s.budget = std::stol(require("budget"));
    s.stop = std::stod(take("stop").value_or("0"));
    s.thin = std::stol(take("thin").value_or("1"));
    s.reference_tol = std::stod(take("reference-tol").value_or("1e-12"));
    s.override_assumptions = take("override-assumptions").value_or("false") == "true";

    for (const auto& text : solver_lines) s.solvers.push_back(parse_solver_spec(text));

    if (!kv.empty()) throw Error("unknown config key: " + kv.begin()->first);
    if (s.graph_n < 2) throw Error("config: graph.n must be at least 2");
    if (s.dim < 1 || s.samples_per_agent < 1) throw Error("config: inconsistent dimensions");
    if (s.family == ObjectiveFamily::logistic && s.dim < 2)
        throw Error("config: logistic objective needs dim >= 2 (intercept column)");
    return s;
}

inline Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config file: " + path);
    return parse_scenario(in);
}

/// Canonical serialization; load(serialize(load(p))) is the identity.
inline std::string serialize_scenario(const Scenario& s) {
    std::ostringstream out;
    out << "name = " << s.name << '\n';
    out << "graph.n = " << s.graph_n << '\n';
    out << "graph.r = " << detail::format_double(s.graph_r) << '\n';
    out << "graph.seed = " << s.graph_seed << '\n';
    out << "mixing.strategy = "
        << (s.strategy == MixingStrategy::metropolis ? "metropolis" : "laplacian") << '\n';
    out << "mixing.eps = " << detail::format_double(s.eps) << '\n';
    out << "mixing.tau = " << (s.tau ? detail::format_double(*s.tau) : "auto") << '\n';
    out << "mixing.wtilde = " << (s.wtilde == WtildeChoice::standard ? "default" : "overshoot")
        << '\n';
    out << "objective.family = "
        << (s.family == ObjectiveFamily::least_squares
                ? "least-squares"
                : (s.family == ObjectiveFamily::huber ? "huber" : "logistic"))
        << '\n';
    out << "objective.seed = " << s.data_seed << '\n';
    out << "objective.samples-per-agent = " << s.samples_per_agent << '\n';
    out << "objective.dim = " << s.dim << '\n';
    out << "objective.signal-scale = " << detail::format_double(s.signal_scale) << '\n';
    out << "objective.xi = " << detail::format_double(s.xi) << '\n';
    out << "objective.normalize = " << (s.normalize ? "true" : "false") << '\n';
    out << "budget = " << s.budget << '\n';
    out << "stop = " << detail::format_double(s.stop) << '\n';
    out << "thin = " << s.thin << '\n';
    out << "reference-tol = " << detail::format_double(s.reference_tol) << '\n';
    out << "override-assumptions = " << (s.override_assumptions ? "true" : "false") << '\n';
    for (const auto& sp : s.solvers) {
        out << "solver = " << (sp.kind == solvers::SolverKind::extra ? "extra" : "dgd") << ' ';
        if (sp.schedule == solvers::ScheduleKind::fixed)
            out << "fixed";
        else
            out << (sp.exponent < 0.4 ? "decay13" : "decay12");
        out << ' ' << sp.alpha_text << '\n';
    }
    return out.str();
}

/// The named built-in scenarios. The -desk variants shrink the logistic
/// case so full runs finish in seconds; the others keep the full
/// dimensions. Seeds are fixed constants recorded here.
inline Scenario builtin_scenario(const std::string& name) {
    auto base = [](const std::string& nm) {
        Scenario s;
        s.name = nm;
        s.graph_n = 10;
        s.graph_r = 0.5;
        s.graph_seed = 101;
        s.strategy = MixingStrategy::metropolis;
        s.eps = 1.0;
        s.family = ObjectiveFamily::least_squares;
        s.data_seed = 202;
        s.samples_per_agent = 1;
        s.dim = 5;
        s.signal_scale = 50.0;
        s.normalize = true;
        s.budget = 2000;
        return s;
    };
    if (name == "ls" || name == "ls-desk") {
        Scenario s = base(name);
        s.budget = name == "ls" ? 5000 : 2000;
        s.solvers.push_back(parse_solver_spec("extra fixed auto"));
        s.solvers.push_back(parse_solver_spec("dgd fixed 0.5276"));
        s.solvers.push_back(parse_solver_spec("dgd decay13 1.5828"));
        s.solvers.push_back(parse_solver_spec("dgd decay12 2.638"));
        return s;
    }
    if (name == "huber" || name == "huber-desk") {
        Scenario s = base(name);
        s.family = ObjectiveFamily::huber;
        s.xi = 2.0;
        s.data_seed = 208;
        s.budget = name == "huber" ? 6000 : 3000;
        s.solvers.push_back(parse_solver_spec("extra fixed auto"));
        s.solvers.push_back(parse_solver_spec("dgd fixed 0.5276"));
        s.solvers.push_back(parse_solver_spec("dgd decay13 5.276"));
        s.solvers.push_back(parse_solver_spec("dgd decay12 10.552"));
        return s;
    }
    if (name == "logistic") {
        Scenario s = base(name);
        s.family = ObjectiveFamily::logistic;
        s.graph_n = 200;
        s.graph_r = 0.2;
        s.graph_seed = 303;
        s.data_seed = 404;
        s.samples_per_agent = 10;
        s.dim = 20;
        s.normalize = false;
        s.budget = 2000;
        s.thin = 10;
        s.solvers.push_back(parse_solver_spec("extra fixed auto"));
        s.solvers.push_back(parse_solver_spec("dgd fixed 0.0059"));
        s.solvers.push_back(parse_solver_spec("dgd decay13 0.059"));
        s.solvers.push_back(parse_solver_spec("dgd decay12 0.118"));
        return s;
    }
    if (name == "logistic-desk") {
        Scenario s = base(name);
        s.family = ObjectiveFamily::logistic;
        s.graph_n = 20;
        s.graph_r = 0.2;
        s.graph_seed = 303;
        s.data_seed = 404;
        s.samples_per_agent = 10;
        s.dim = 8;
        s.normalize = false;
        s.budget = 3000;
        s.solvers.push_back(parse_solver_spec("extra fixed auto"));
        s.solvers.push_back(parse_solver_spec("dgd fixed 0.05"));
        s.solvers.push_back(parse_solver_spec("dgd decay13 0.5"));
        s.solvers.push_back(parse_solver_spec("dgd decay12 1.0"));
        return s;
    }
    throw Error("unknown built-in scenario: " + name +
                " (expected ls | huber | logistic | ls-desk | huber-desk | logistic-desk)");
}

/// Everything execute() builds before solvers run: the network, the
/// validated mixing pair, the stacked objective, the reference solution,
/// and the start stack.
struct PreparedScenario {
    graph::Graph graph;
    mixing::MixingPair pair;
    objectives::StackedObjective objective;
    Vector x_star;
    linalg::DenseMatrix x0;
    double extra_bound = 0.0;
    bool huber_reference_in_zone = true;  // meaningful for huber scenarios
    bool huber_start_in_l1 = true;
};

inline objectives::StackedObjective build_objective(const Scenario& s,
                                                    const objectives::SensingData& data) {
    switch (s.family) {
        case ObjectiveFamily::least_squares:
            return objectives::stack_least_squares(data);
        case ObjectiveFamily::huber:
            return objectives::stack_huber(data, s.xi);
        case ObjectiveFamily::logistic:
            return objectives::stack_logistic(data);
    }
    throw Error("unreachable objective family");
}

inline objectives::SensingData build_data(const Scenario& s) {
    objectives::SensingData data =
        s.family == ObjectiveFamily::logistic
            ? objectives::make_logistic_data(s.graph_n, s.samples_per_agent, s.dim, s.data_seed)
            : objectives::make_sensing_data(s.graph_n, s.samples_per_agent, s.dim,
                                            s.signal_scale, s.data_seed);
    if (s.normalize) data = objectives::normalize_unit_lipschitz(std::move(data));
    return data;
}

inline PreparedScenario prepare(const Scenario& s) {
    graph::Graph g = graph::random_connected(s.graph_n, s.graph_r, s.graph_seed);
    linalg::SymMatrix w = s.strategy == MixingStrategy::metropolis
                              ? mixing::metropolis(g, s.eps)
                              : mixing::laplacian_weights(g, s.tau.value_or(mixing::default_tau(g)));
    linalg::SymMatrix wt = s.wtilde == WtildeChoice::standard ? mixing::wtilde_default(w)
                                                              : mixing::wtilde_overshoot(w);
    mixing::MixingPair pair = mixing::make_mixing_pair(std::move(w), std::move(wt), g);

    const objectives::SensingData data = build_data(s);
    objectives::StackedObjective obj = build_objective(s, data);
    Vector x_star = objectives::centralized_reference(obj, s.reference_tol);

    linalg::DenseMatrix x0(s.graph_n, s.dim);
    bool ref_in_zone = true;
    bool start_in_l1 = true;
    if (s.family == ObjectiveFamily::huber) {
        // Reference must sit in the quadratic zone; the start stack must put
        // every per-sample residual in the linear zone. If zeros do not, the
        // start is pushed away from the reference along -x* until they do.
        auto all_beyond_xi = [&](const Vector& point) {
            for (size_t i = 0; i < obj.agent_count(); ++i) {
                const auto& h = static_cast<const objectives::HuberObjective&>(obj.agent(i));
                const auto& m = h.measurement();
                for (size_t r = 0; r < m.rows(); ++r) {
                    double resid = -h.observation()[r];
                    for (size_t c = 0; c < s.dim; ++c) resid += m(r, c) * point[c];
                    if (std::abs(resid) <= s.xi) return false;
                }
            }
            return true;
        };
        for (size_t i = 0; i < obj.agent_count(); ++i) {
            const auto& h = static_cast<const objectives::HuberObjective&>(obj.agent(i));
            if (!h.in_quadratic_zone(x_star)) ref_in_zone = false;
        }
        Vector start(s.dim, 0.0);
        double push = 1.0;
        while (!all_beyond_xi(start) && push < 1e6) {
            double norm = 0.0;
            for (double v : x_star) norm += v * v;
            norm = std::sqrt(norm);
            for (size_t c = 0; c < s.dim; ++c) start[c] = -push * x_star[c] / norm;
            push *= 2.0;
        }
        start_in_l1 = all_beyond_xi(start);
        for (size_t i = 0; i < s.graph_n; ++i)
            for (size_t c = 0; c < s.dim; ++c) x0(i, c) = start[c];
    }

    const double bound = 2.0 * pair.lambda_min_wt / obj.lipschitz();
    return PreparedScenario{std::move(g),    std::move(pair), std::move(obj), std::move(x_star),
                            std::move(x0),   bound,           ref_in_zone,    start_in_l1};
}

/// Step size a solver entry resolves to: literal values pass through,
/// "auto" takes 90% of the fixed-step bound.
inline double resolve_alpha(const SolverSpec& spec, double extra_bound) {
    if (spec.alpha_text == "auto") {
        if (spec.kind != solvers::SolverKind::extra)
            throw Error("auto step size is only defined for the extra solver");
        return 0.9 * extra_bound;
    }
    return std::stod(spec.alpha_text);
}

struct SolverSummary {
    std::string label;
    double alpha = 0.0;
    long iterations = 0;
    double final_relative_residual = 0.0;
    bool diverged = false;
    long diverged_at = -1;
    double tail_factor = 1.0;
    double tail_r_squared = 0.0;
    long phase_boundary = -1;
    std::string csv_path;
};

struct RunArtifact {
    Scenario scenario;
    std::string config_echo;
    std::vector<SolverSummary> solvers;
    std::vector<solvers::SolverTrace> traces;
    mixing::ValidationReport assumption_report;
    double distance_x0_to_reference = 0.0;
    double lipschitz = 0.0;
    double extra_bound = 0.0;
};

/// Fixed trace CSV schema: header plus one row per iteration, 17
/// significant digits, newline terminated.
inline void write_trace_csv(std::ostream& out, const solvers::SolverTrace& trace) {
    out << "k,relative_residual,consensus_violation,res1,res2,z_dist,alpha_k\n";
    char buf[40];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        out << ',' << buf;
    };
    for (const auto& r : trace.records) {
        out << r.k;
        put(r.relative_residual);
        put(r.consensus_violation);
        put(r.res1);
        put(r.res2);
        put(r.z_dist_sq);
        put(r.alpha_k);
        out << '\n';
    }
}

inline void write_matrix_csv(std::ostream& out, const linalg::SymMatrix& m) {
    char buf[40];
    for (size_t i = 0; i < m.size(); ++i) {
        for (size_t j = 0; j < m.size(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
            out << (j ? "," : "") << buf;
        }
        out << '\n';
    }
}

/// Writes the scenario's per-agent data files: one CSV per agent with the
/// measurement rows and the observation (or label) appended as the last
/// column.
inline std::vector<std::string> dump_scenario_data(const Scenario& scenario,
                                                   const std::string& out_dir) {
    const objectives::SensingData data = build_data(scenario);
    std::filesystem::create_directories(out_dir);
    std::vector<std::string> paths;
    for (size_t i = 0; i < data.agent_count(); ++i) {
        const std::string path =
            (std::filesystem::path(out_dir) /
             (scenario.name + "__agent" + std::to_string(i) + ".csv"))
                .string();
        std::ofstream out(path, std::ios::binary);
        if (!out) throw Error("cannot write data CSV: " + path);
        objectives::write_sensing_csv(out, data.m[i], data.y[i]);
        paths.push_back(path);
    }
    return paths;
}

inline std::string summary_json(const RunArtifact& artifact) {
    nlohmann::json j;
    j["scenario"] = artifact.scenario.name;
    j["lipschitz"] = artifact.lipschitz;
    j["extra_step_bound"] = artifact.extra_bound;
    j["distance_x0_to_reference"] = artifact.distance_x0_to_reference;
    j["assumptions"] = {
        {"decentralized", artifact.assumption_report.decentralized},
        {"symmetric", artifact.assumption_report.symmetric},
        {"null_space", artifact.assumption_report.null_space},
        {"spectral", artifact.assumption_report.spectral},
        {"lambda_min_wt", artifact.assumption_report.lambda_min_wt},
    };
    j["solvers"] = nlohmann::json::array();
    for (const auto& s : artifact.solvers) {
        j["solvers"].push_back({
            {"label", s.label},
            {"alpha", s.alpha},
            {"iterations", s.iterations},
            {"final_relative_residual", s.final_relative_residual},
            {"diverged", s.diverged},
            {"diverged_at", s.diverged_at},
            {"tail_factor", s.tail_factor},
            {"tail_r_squared", s.tail_r_squared},
            {"phase_boundary", s.phase_boundary},
            {"csv", std::filesystem::path(s.csv_path).filename().string()},
        });
    }
    return j.dump(2);
}

/// Runs every configured solver of a scenario on identical data and writes
/// one CSV per solver plus a summary. Divergence of one solver is recorded
/// without aborting the others.
inline RunArtifact execute(const Scenario& scenario, const std::string& out_dir) {
    PreparedScenario prep = prepare(scenario);
    if (!prep.pair.report.all_passed() && !scenario.override_assumptions)
        throw Error("scenario mixing pair fails the assumption check; set override-assumptions");

    std::filesystem::create_directories(out_dir);

    RunArtifact artifact;
    artifact.scenario = scenario;
    artifact.config_echo = serialize_scenario(scenario);
    artifact.assumption_report = prep.pair.report;
    artifact.lipschitz = prep.objective.lipschitz();
    artifact.extra_bound = prep.extra_bound;
    artifact.distance_x0_to_reference =
        (prep.x0 - diagnostics::consensual_stack(prep.x_star, scenario.graph_n)).frobenius_norm();

    for (const auto& spec : scenario.solvers) {
        SolverSummary summary;
        summary.label = spec.label();
        summary.alpha = resolve_alpha(spec, prep.extra_bound);

        solvers::RunConfig cfg;
        cfg.kind = spec.kind;
        cfg.schedule = spec.schedule == solvers::ScheduleKind::fixed
                           ? solvers::StepSchedule::fixed(summary.alpha)
                           : solvers::StepSchedule::decay(summary.alpha, spec.exponent);
        cfg.budget = scenario.budget;
        cfg.stop = scenario.stop;
        cfg.thin = scenario.thin;
        cfg.override_assumptions = scenario.override_assumptions;

        solvers::SolverTrace trace =
            solvers::run(cfg, prep.pair, prep.objective, prep.x0, prep.x_star);

        summary.iterations = trace.iterations();
        summary.final_relative_residual = trace.final_record().relative_residual;
        summary.diverged = trace.diverged;
        summary.diverged_at = trace.diverged_at;

        // Tail fit over the final half of the usable window (truncated at
        // the first residual below 1e-12, where rounding noise takes over).
        long usable = static_cast<long>(trace.records.size());
        for (size_t k = 0; k < trace.records.size(); ++k) {
            if (trace.records[k].relative_residual <= 1e-12) {
                usable = static_cast<long>(k) + 1;
                break;
            }
        }
        const auto fit = diagnostics::rate_fit(trace, usable / 2, usable);
        summary.tail_factor = fit.factor;
        summary.tail_r_squared = fit.r_squared;
        summary.phase_boundary = fit.phase_boundary;

        const std::string csv_path =
            (std::filesystem::path(out_dir) / (scenario.name + "__" + summary.label + ".csv"))
                .string();
        std::ofstream csv(csv_path, std::ios::binary);
        if (!csv) throw Error("cannot write trace CSV: " + csv_path);
        write_trace_csv(csv, trace);
        summary.csv_path = csv_path;

        artifact.solvers.push_back(summary);
        artifact.traces.push_back(std::move(trace));
    }

    const std::string echo_path =
        (std::filesystem::path(out_dir) / (scenario.name + "__config.txt")).string();
    std::ofstream echo(echo_path, std::ios::binary);
    echo << artifact.config_echo;

    const std::string summary_path =
        (std::filesystem::path(out_dir) / (scenario.name + "__summary.json")).string();
    std::ofstream summary(summary_path, std::ios::binary);
    summary << summary_json(artifact) << '\n';

    return artifact;
}

}  // namespace extra::harness
