// Experiment configuration. Configs are flat key/value text (dotted keys for
// nesting, '#' comments) or the same keys as a JSON object. The seed is
// mandatory: there is no wall-clock fallback, every run must be replayable.
#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>

#include "arw/core.hpp"
#include "arw/estimators.hpp"
#include "arw/graph.hpp"
#include "arw/stabilize.hpp"

namespace arw {

class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

enum class ExperimentKind {
    RwStats,
    Stabilize,
    QBounds,
    Activity,
    MuC,
    SuffCond,
    Branching,
    TreePack,
};

const char* kind_name(ExperimentKind kind);
ExperimentKind kind_from_name(const std::string& name);

struct RunConfig {
    ExperimentKind kind = ExperimentKind::RwStats;
    GraphSpec graph;
    ModelParams model;
    int64_t trials = 1000;
    uint64_t seed = 0;
    std::string out_dir = ".";
    uint64_t step_budget = kDefaultStepBudget;
    int parallel = 1;
    bool dump_tape = false;

    int64_t rw_horizon = 1'000'000;
    int64_t activity_theta = 1;
    bool activity_mask_sleeps = false;
    BisectionSettings muc;
    BranchingParams branching;
    int64_t branching_prefix_steps = 0;
    // auto: on for transient families, off otherwise.
    enum class UpperMode { Auto, On, Off } qbounds_upper = UpperMode::Auto;
    ToppleOrder stabilize_order = ToppleOrder::Fifo;

    bool uses_graph() const { return kind != ExperimentKind::Branching; }
    void validate() const;
};

using FlatConfig = std::map<std::string, std::string>;

// Key/value text or (when the first non-space byte is '{') a JSON object.
// Values keep their textual form; numbers are parsed during assembly so
// diagnostics can point at the offending key.
FlatConfig parse_flat_config(const std::string& text, const std::string& source_name);

RunConfig config_from_flat(const FlatConfig& flat, const std::string& source_name);
FlatConfig config_to_flat(const RunConfig& config);

RunConfig load_run_config(const std::string& path);

}  // namespace arw
