#include "arw/report_io.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "arw/parallel.hpp"
#include "arw/walks.hpp"

namespace arw {

namespace {

nlohmann::json estimate_json(const std::string& name, const Estimate& e) {
    return nlohmann::json{{"name", name},
                          {"value", e.value},
                          {"std_error", e.std_error},
                          {"trials", e.trials}};
}

nlohmann::json check_json(const BoundCheck& c) {
    return nlohmann::json{{"name", c.name},         {"bound", c.bound},
                          {"estimate", c.estimate}, {"sigma", c.sigma},
                          {"slack_sigma", c.slack_sigma}, {"verdict", verdict_name(c.verdict)}};
}

struct Collector {
    nlohmann::json estimates = nlohmann::json::array();
    nlohmann::json details;
    std::vector<BoundCheck> checks;

    void add(const std::string& name, const Estimate& e) {
        estimates.push_back(estimate_json(name, e));
    }
    void add_value(const std::string& name, double v) {
        estimates.push_back(estimate_json(name, Estimate{v, 0.0, 0}));
    }
    void add_check(const BoundCheck& c) { checks.push_back(c); }
};

std::string graph_tag(const GraphSpec& g) {
    switch (g.family) {
        case GraphFamily::Line:
            return g.jump_kind == JumpKind::TotallyAsymmetric ? "line-asym" : "line";
        case GraphFamily::Lattice: return "lattice" + std::to_string(g.dimension) + "d";
        case GraphFamily::RegularTree: return "tree" + std::to_string(g.degree);
    }
    return "?";
}

void execute_into(const RunConfig& c, Collector& out) {
    switch (c.kind) {
        case ExperimentKind::RwStats: {
            const Graph g = Graph::build(c.graph);
            const RwStats s = estimate_rw_stats(g, c.trials, c.rw_horizon, c.seed, c.parallel);
            out.add("green_visits", s.green_visits);
            out.add("nonreturn", s.nonreturn);
            out.add("speed", s.speed);
            out.details = {{"horizon_capped", s.horizon_capped}};
            break;
        }
        case ExperimentKind::Stabilize: {
            const Graph g = Graph::build(c.graph);
            std::vector<double> origin_m(static_cast<size_t>(c.trials));
            std::vector<double> sleepers(static_cast<size_t>(c.trials));
            std::vector<double> absorbed(static_cast<size_t>(c.trials));
            std::vector<double> steps(static_cast<size_t>(c.trials));
            nlohmann::json per_trial = nlohmann::json::array();
            run_trials(c.trials, c.parallel, [&](int64_t t) {
                SimContext ctx = make_context(g, c.model,
                                              rng::trial_seed(c.seed, static_cast<uint64_t>(t)),
                                              c.step_budget);
                const StabilizationReport rep = stabilize_ball(ctx, c.stabilize_order, c.seed);
                origin_m[static_cast<size_t>(t)] = static_cast<double>(rep.origin_topplings);
                double slept = 0;
                for (uint8_t s : rep.sleeping) slept += s;
                sleepers[static_cast<size_t>(t)] = slept;
                absorbed[static_cast<size_t>(t)] = static_cast<double>(rep.absorbed);
                steps[static_cast<size_t>(t)] = static_cast<double>(rep.steps);
            });
            for (int64_t t = 0; t < c.trials; ++t)
                per_trial.push_back({{"trial", t},
                                     {"origin_topplings", origin_m[static_cast<size_t>(t)]},
                                     {"sleeping_sites", sleepers[static_cast<size_t>(t)]},
                                     {"absorbed", absorbed[static_cast<size_t>(t)]},
                                     {"instructions", steps[static_cast<size_t>(t)]}});
            out.add("origin_topplings", mean_estimate(origin_m));
            out.add("sleeping_sites", mean_estimate(sleepers));
            out.add("absorbed", mean_estimate(absorbed));
            out.details = {{"trials", std::move(per_trial)}};
            if (c.dump_tape) {
                // Audit dump of the first trial's consumed tape prefix.
                SimContext ctx = make_context(g, c.model, rng::trial_seed(c.seed, 0), c.step_budget);
                stabilize_ball(ctx, c.stabilize_order, c.seed);
                std::ostringstream csv;
                csv << "site,index,instruction\n";
                for (VertexId v = 0; v < g.vertex_count(); ++v) {
                    for (uint64_t j = 1; j <= ctx.odometer.at(v); ++j) {
                        const Instruction ins = ctx.tape.read_unmasked(v, j);
                        csv << g.label(v) << "," << j << ",";
                        if (ins.kind == InstrKind::Sleep)
                            csv << "sleep";
                        else
                            csv << "jump:" << g.label(g.jump_target(v, ins.slot));
                        csv << "\n";
                    }
                }
                out.details["tape_audit_csv"] = csv.str();
            }
            break;
        }
        case ExperimentKind::QBounds: {
            const Graph g = Graph::build(c.graph);
            bool upper = c.qbounds_upper == RunConfig::UpperMode::On ||
                         (c.qbounds_upper == RunConfig::UpperMode::Auto &&
                          is_transient_family(c.graph));
            double green = 0.0, green_err = 0.0;
            if (upper) {
                if (c.graph.family == GraphFamily::RegularTree) {
                    green = tree_green_exact(c.graph.degree);
                } else {
                    const RwStats s =
                        estimate_rw_stats(g, c.trials, c.rw_horizon, rng::hash2(c.seed, 0x477265656eULL),
                                          c.parallel);
                    green = s.green_visits.value;
                    green_err = s.green_visits.std_error;
                }
            }
            const QBoundsResult r = estimate_q_and_check_bounds(
                g, g.origin(), g.by_distance(), c.model, c.trials, c.seed, upper, green,
                green_err, c.parallel, c.step_budget);
            out.add("q", r.q);
            out.add("toppled_once", r.toppled);
            out.add_check(r.lower);
            if (r.upper) {
                out.add_check(*r.upper);
                out.add_value("q_upper_bound_value", r.upper->bound);
                out.add_value("green_value", r.green_value);
            }
            break;
        }
        case ExperimentKind::Activity: {
            const Graph g = Graph::build(c.graph);
            const ActivityResult r =
                estimate_activity(g, c.model, c.activity_theta, c.trials, c.seed, c.parallel,
                                  c.step_budget, c.activity_mask_sleeps);
            out.add("activity_probability", r.probability);
            out.add("mean_origin_topplings", r.mean_origin_topplings);
            out.details = {{"theta", r.theta}};
            break;
        }
        case ExperimentKind::MuC: {
            const Graph g = Graph::build(c.graph);
            const MuCResult r =
                estimate_mu_c(g, c.model.lambda, c.muc, c.seed, c.parallel, c.step_budget);
            out.add_value("mu_c_lo", r.lo);
            out.add_value("mu_c_hi", r.hi);
            nlohmann::json evals = nlohmann::json::array();
            for (const auto& [mu, act] : r.evaluations)
                evals.push_back({{"mu", mu}, {"activity", act}});
            out.details = {{"evaluations", std::move(evals)},
                           {"theta", c.muc.theta},
                           {"cutoff", c.muc.cutoff}};
            break;
        }
        case ExperimentKind::SuffCond: {
            const Graph g = Graph::build(c.graph);
            const SuffCondEstimate r =
                estimate_sufficient_condition(g, c.model, c.trials, c.seed, c.parallel);
            out.add("m_total", r.m_total);
            out.add("m_surviving", r.m_surviving);
            out.add("ratio", r.ratio);
            out.add_value("threshold", r.threshold);
            out.add_check(r.condition);
            nlohmann::json levels = nlohmann::json::array();
            for (size_t n = 0; n < r.per_level.size(); ++n)
                levels.push_back({{"level", n},
                                  {"visits", r.per_level[n].value},
                                  {"visits_surviving", r.per_level_surviving[n].value}});
            out.details = {{"levels", std::move(levels)}};
            break;
        }
        case ExperimentKind::Branching: {
            BranchingParams p = c.branching;
            const BranchingReport r =
                simulate_branching(p, c.trials, c.seed, c.parallel, c.branching_prefix_steps);
            out.add("survival", r.survival);
            out.add("psi_ratio", r.psi_ratio);
            const double factor = drift_factor(p.fanout, p.advance_prob, p.beta);
            out.add_value("drift_factor", factor);
            if (factor < 1.0) out.add_check(check_upper("psi_drift", r.psi_ratio, factor));
            out.details = {{"censored", r.censored},
                           {"died", r.died},
                           {"min_position", r.min_position},
                           {"psi_samples", r.psi_samples},
                           {"supercritical_drift", factor >= 1.0}};
            if (c.branching_prefix_steps > 0) {
                out.add("all_advance_prefix", r.all_advance_prefix);
                const double expect =
                    std::pow(p.advance_prob,
                             static_cast<double>(p.fanout * c.branching_prefix_steps));
                out.add_value("all_advance_prefix_exact", expect);
            }
            break;
        }
        case ExperimentKind::TreePack: {
            const Graph g = Graph::build(c.graph);
            std::vector<uint8_t> success(static_cast<size_t>(c.trials), 0);
            std::vector<double> corrupted(static_cast<size_t>(c.trials), 0.0);
            std::vector<int64_t> causes(static_cast<size_t>(c.trials), 0);
            run_trials(c.trials, c.parallel, [&](int64_t t) {
                const PackReport rep = tree_pack_stabilize(
                    g, c.model, rng::trial_seed(c.seed, static_cast<uint64_t>(t)), c.step_budget);
                success[static_cast<size_t>(t)] = rep.success ? 1 : 0;
                corrupted[static_cast<size_t>(t)] =
                    rep.corrupted_size_history.empty()
                        ? 1.0
                        : static_cast<double>(rep.corrupted_size_history.back());
                causes[static_cast<size_t>(t)] = static_cast<int64_t>(rep.failure);
            });
            int64_t ok = 0, no_sleep = 0, inside = 0;
            for (int64_t t = 0; t < c.trials; ++t) {
                ok += success[static_cast<size_t>(t)];
                no_sleep += causes[static_cast<size_t>(t)] ==
                            static_cast<int64_t>(PackFailure::NoSleepBeforeCorrupted);
                inside += causes[static_cast<size_t>(t)] ==
                          static_cast<int64_t>(PackFailure::ParticleInsideCorrupted);
            }
            out.add("success", fraction_estimate(ok, c.trials));
            out.add("final_corrupted_size", mean_estimate(corrupted));
            out.details = {{"failed_no_sleep", no_sleep}, {"failed_particle_inside", inside}};
            break;
        }
    }
}

}  // namespace

RunResult execute(const RunConfig& config) {
    config.validate();
    RunResult result;
    Collector out;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        execute_into(config, out);
    } catch (const StepBudgetExceeded&) {
        result.budget_exceeded = true;
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    nlohmann::json checks = nlohmann::json::array();
    bool violated = false;
    for (const BoundCheck& c : out.checks) {
        checks.push_back(check_json(c));
        violated |= c.verdict == Verdict::Violated;
    }
    result.checks = out.checks;
    result.report = {{"schema", "arw-report-v1"},
                     {"kind", kind_name(config.kind)},
                     {"config", config_to_flat(config)},
                     {"seed", config.seed},
                     {"estimates", out.estimates},
                     {"checks", checks},
                     {"details", out.details.is_null() ? nlohmann::json::object() : out.details},
                     {"budget_exceeded", result.budget_exceeded},
                     {"elapsed_sec", elapsed}};
    result.exit_code = result.budget_exceeded ? 3 : (violated ? 1 : 0);
    return result;
}

std::string summary_csv(const RunConfig& config, const RunResult& result) {
    std::ostringstream csv;
    csv << kCsvHeader << "\n";
    csv.precision(17);
    const std::string graph = config.uses_graph() ? graph_tag(config.graph) : "-";
    const int L = config.uses_graph() ? config.graph.radius : 0;
    const double mu = config.uses_graph() ? config.model.mu : 0.0;
    const double lambda = config.uses_graph() ? config.model.lambda : 0.0;
    auto row_head = [&](const std::string& name) -> std::ostringstream& {
        csv << graph << "," << L << "," << mu << "," << lambda << "," << name << ",";
        return csv;
    };
    for (const auto& e : result.report.at("estimates")) {
        row_head(e.at("name").get<std::string>())
            << e.at("value").get<double>() << "," << e.at("std_error").get<double>() << ","
            << e.at("trials").get<int64_t>() << "," << config.seed << ",-\n";
    }
    for (const BoundCheck& c : result.checks) {
        row_head(c.name) << c.estimate << "," << c.sigma << "," << config.trials << ","
                         << config.seed << "," << verdict_name(c.verdict) << "\n";
    }
    return csv.str();
}

RunResult run_experiment(const RunConfig& config, bool verbose) {
    RunResult result = execute(config);
    std::filesystem::create_directories(config.out_dir);
    const std::filesystem::path out(config.out_dir);
    {
        std::ofstream f(out / "report.json");
        f << result.report.dump(2) << "\n";
    }
    {
        std::ofstream f(out / "summary.csv");
        f << summary_csv(config, result);
    }
    if (result.report.at("details").contains("tape_audit_csv")) {
        std::ofstream f(out / "tape_audit.csv");
        f << result.report["details"]["tape_audit_csv"].get<std::string>();
    }
    if (verbose) {
        for (const BoundCheck& c : result.checks)
            std::cout << "[check] " << c.name << ": " << verdict_name(c.verdict)
                      << " (estimate " << c.estimate << " vs bound " << c.bound << ", slack "
                      << c.slack_sigma << " sigma)\n";
        if (result.budget_exceeded) std::cout << "[budget] step budget exceeded\n";
    }
    return result;
}

void replay_report(const std::string& report_path, int parallel_override) {
    std::ifstream in(report_path);
    if (!in) throw MismatchError("cannot open report '" + report_path + "'");
    nlohmann::json stored;
    try {
        in >> stored;
    } catch (const nlohmann::json::parse_error& e) {
        throw MismatchError("report is not valid JSON: " + std::string(e.what()));
    }
    if (!stored.contains("config"))
        throw MismatchError("report carries no embedded config, cannot replay");

    FlatConfig flat;
    for (const auto& [k, v] : stored.at("config").items()) flat[k] = v.get<std::string>();
    RunConfig config = config_from_flat(flat, report_path + "#config");
    if (parallel_override >= 1) config.parallel = parallel_override;

    const RunResult fresh = execute(config);
    const auto& a = stored.at("estimates");
    const auto& b = fresh.report.at("estimates");
    if (a.size() != b.size())
        throw MismatchError("estimate count differs: stored " + std::to_string(a.size()) +
                            ", replayed " + std::to_string(b.size()));
    for (size_t i = 0; i < a.size(); ++i) {
        const std::string name = a[i].at("name").get<std::string>();
        if (name != b[i].at("name").get<std::string>())
            throw MismatchError("estimate #" + std::to_string(i) + " name differs: " + name);
        const double va = a[i].at("value").get<double>();
        const double vb = b[i].at("value").get<double>();
        if (!(va == vb) && !(std::isnan(va) && std::isnan(vb)))
            throw MismatchError("estimate '" + name + "' differs: stored " +
                                std::to_string(va) + ", replayed " + std::to_string(vb));
    }
}

}  // namespace arw
