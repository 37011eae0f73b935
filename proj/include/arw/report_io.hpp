// Runs an experiment from a RunConfig and serializes the outcome. Each run
// yields one JSON report (full detail, including the config needed to replay
// it) and one CSV summary with a fixed column schema. replay() re-executes a
// report's embedded config and insists on bit-identical point estimates.
#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "arw/run_config.hpp"
#include "arw/stats.hpp"

namespace arw {

class MismatchError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct RunResult {
    nlohmann::json report;
    std::vector<BoundCheck> checks;
    bool budget_exceeded = false;
    // 0 clean, 1 a check was violated, 3 a budget was exceeded.
    int exit_code = 0;
};

// Execute without touching the filesystem.
RunResult execute(const RunConfig& config);

// Execute and write <out>/report.json and <out>/summary.csv; prints one
// verdict line per bound check to the given stream when verbose.
RunResult run_experiment(const RunConfig& config, bool verbose = true);

// CSV schema shared by every experiment kind.
inline constexpr const char* kCsvHeader =
    "graph,L,mu,lambda,estimator,point,std_error,trials,seed,verdict";

std::string summary_csv(const RunConfig& config, const RunResult& result);

// Re-run the embedded config of a stored report and compare every point
// estimate bit for bit. Throws MismatchError naming the first divergence.
// parallel_override < 1 keeps the stored width.
void replay_report(const std::string& report_path, int parallel_override = -1);

}  // namespace arw
