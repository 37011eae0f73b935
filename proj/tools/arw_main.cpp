// arw: experiment runner for the activated-random-walk simulation library.
//
//   arw <kind> --config cfg [--seed N] [--trials N] [--out DIR]
//              [--parallel W] [--dump-tape]
//   arw replay report.json [--parallel W]
//
// Exit status: 0 clean, 1 a bound check was violated, 2 bad configuration,
// 3 a step/token budget was exceeded, 4 replay mismatch.

#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>

#include "arw/report_io.hpp"

namespace {

int run_kind(const std::string& kind, const std::string& config_path, int64_t seed,
             int64_t trials, const std::string& out_dir, int parallel, bool dump_tape,
             bool seed_set, bool trials_set) {
    arw::RunConfig config = arw::load_run_config(config_path);
    if (arw::kind_name(config.kind) != kind)
        throw arw::ConfigError("config declares kind '" + std::string(arw::kind_name(config.kind)) +
                               "' but the command line asked for '" + kind + "'");
    if (seed_set) config.seed = static_cast<uint64_t>(seed);
    if (trials_set) config.trials = trials;
    if (!out_dir.empty()) config.out_dir = out_dir;
    if (parallel >= 1) config.parallel = parallel;
    if (dump_tape) config.dump_tape = true;
    if (const char* env = std::getenv("ARW_BUDGET")) {
        config.step_budget = std::strtoull(env, nullptr, 10);
        if (config.step_budget == 0) throw arw::ConfigError("ARW_BUDGET must be a positive integer");
    }
    config.validate();
    const arw::RunResult result = arw::run_experiment(config);
    std::cout << "report: " << config.out_dir << "/report.json\n";
    return result.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"activated random walk experiments"};
    app.require_subcommand(1);

    static const std::vector<std::string> kinds = {"rw-stats", "stabilize", "q-bounds",
                                                   "activity", "mu-c",      "suffcond",
                                                   "branching", "tree-pack"};

    std::string config_path, out_dir;
    int64_t seed = 0, trials = 0;
    int parallel = 0;
    bool dump_tape = false;

    std::vector<CLI::App*> subs;
    for (const std::string& kind : kinds) {
        CLI::App* sub = app.add_subcommand(kind, "run a " + kind + " experiment");
        sub->add_option("--config", config_path, "config file (key/value or JSON)")->required();
        sub->add_option("--seed", seed, "override the master seed");
        sub->add_option("--trials", trials, "override the trial count");
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--parallel", parallel, "trial scheduler width");
        sub->add_flag("--dump-tape", dump_tape, "write a tape audit CSV (stabilize only)");
        subs.push_back(sub);
    }

    std::string report_path;
    int replay_parallel = -1;
    CLI::App* replay = app.add_subcommand("replay", "re-run a report and verify determinism");
    replay->add_option("report", report_path, "report.json produced by a previous run")->required();
    replay->add_option("--parallel", replay_parallel, "trial scheduler width for the re-run");

    CLI11_PARSE(app, argc, argv);

    try {
        if (replay->parsed()) {
            arw::replay_report(report_path, replay_parallel);
            std::cout << "replay ok: estimates are bit-identical\n";
            return 0;
        }
        for (size_t i = 0; i < subs.size(); ++i) {
            if (subs[i]->parsed())
                return run_kind(kinds[i], config_path, seed, trials, out_dir, parallel, dump_tape,
                                subs[i]->count("--seed") > 0, subs[i]->count("--trials") > 0);
        }
    } catch (const arw::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const arw::MismatchError& e) {
        std::cerr << "replay mismatch: " << e.what() << "\n";
        return 4;
    } catch (const arw::StepBudgetExceeded& e) {
        std::cerr << "budget: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
