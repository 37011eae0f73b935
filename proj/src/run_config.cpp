#include "arw/run_config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace arw {

namespace {

std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

[[noreturn]] void bad_field(const std::string& source, const std::string& key,
                            const std::string& reason) {
    throw ConfigError(source + ": field '" + key + "': " + reason);
}

class FieldReader {
  public:
    FieldReader(const FlatConfig& flat, std::string source)
        : flat_(flat), source_(std::move(source)) {}

    bool has(const std::string& key) const { return flat_.count(key) > 0; }

    std::string str(const std::string& key, const std::string& fallback) {
        mark(key);
        auto it = flat_.find(key);
        return it == flat_.end() ? fallback : it->second;
    }

    std::string required(const std::string& key) {
        mark(key);
        auto it = flat_.find(key);
        if (it == flat_.end()) bad_field(source_, key, "required but missing");
        return it->second;
    }

    double num(const std::string& key, double fallback) {
        mark(key);
        auto it = flat_.find(key);
        if (it == flat_.end()) return fallback;
        return parse_num(key, it->second);
    }

    int64_t integer(const std::string& key, int64_t fallback) {
        mark(key);
        auto it = flat_.find(key);
        if (it == flat_.end()) return fallback;
        return parse_int(key, it->second);
    }

    uint64_t uinteger(const std::string& key, uint64_t fallback) {
        mark(key);
        auto it = flat_.find(key);
        if (it == flat_.end()) return fallback;
        try {
            size_t pos = 0;
            const uint64_t v = std::stoull(it->second, &pos);
            if (pos != it->second.size()) throw std::invalid_argument("");
            return v;
        } catch (...) {
            bad_field(source_, key, "expected a non-negative integer, got '" + it->second + "'");
        }
    }

    bool flag(const std::string& key, bool fallback) {
        mark(key);
        auto it = flat_.find(key);
        if (it == flat_.end()) return fallback;
        const std::string v = it->second;
        if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
        if (v == "false" || v == "0" || v == "no" || v == "off") return false;
        bad_field(source_, key, "expected a boolean, got '" + v + "'");
    }

    void finish() const {
        for (const auto& [key, value] : flat_) {
            (void)value;
            if (!seen_.count(key))
                throw ConfigError(source_ + ": unknown field '" + key + "'");
        }
    }

  private:
    double parse_num(const std::string& key, const std::string& text) {
        try {
            size_t pos = 0;
            const double v = std::stod(text, &pos);
            if (pos != text.size()) throw std::invalid_argument("");
            return v;
        } catch (...) {
            bad_field(source_, key, "expected a number, got '" + text + "'");
        }
    }

    int64_t parse_int(const std::string& key, const std::string& text) {
        try {
            size_t pos = 0;
            const int64_t v = std::stoll(text, &pos);
            if (pos != text.size()) throw std::invalid_argument("");
            return v;
        } catch (...) {
            bad_field(source_, key, "expected an integer, got '" + text + "'");
        }
    }

    void mark(const std::string& key) { seen_.insert(key); }

    const FlatConfig& flat_;
    std::string source_;
    mutable std::set<std::string> seen_;
};

void flatten_json(const nlohmann::json& j, const std::string& prefix, FlatConfig& out,
                  const std::string& source) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
        const nlohmann::json& v = it.value();
        if (v.is_object()) {
            flatten_json(v, key, out, source);
        } else if (v.is_string()) {
            out[key] = v.get<std::string>();
        } else if (v.is_boolean()) {
            out[key] = v.get<bool>() ? "true" : "false";
        } else if (v.is_number_unsigned()) {
            out[key] = std::to_string(v.get<uint64_t>());
        } else if (v.is_number_integer()) {
            out[key] = std::to_string(v.get<int64_t>());
        } else if (v.is_number_float()) {
            std::ostringstream os;
            os.precision(17);
            os << v.get<double>();
            out[key] = os.str();
        } else {
            throw ConfigError(source + ": field '" + key + "' has an unsupported JSON type");
        }
    }
}

}  // namespace

const char* kind_name(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::RwStats: return "rw-stats";
        case ExperimentKind::Stabilize: return "stabilize";
        case ExperimentKind::QBounds: return "q-bounds";
        case ExperimentKind::Activity: return "activity";
        case ExperimentKind::MuC: return "mu-c";
        case ExperimentKind::SuffCond: return "suffcond";
        case ExperimentKind::Branching: return "branching";
        case ExperimentKind::TreePack: return "tree-pack";
    }
    return "?";
}

ExperimentKind kind_from_name(const std::string& name) {
    static const std::map<std::string, ExperimentKind> table = {
        {"rw-stats", ExperimentKind::RwStats}, {"stabilize", ExperimentKind::Stabilize},
        {"q-bounds", ExperimentKind::QBounds}, {"activity", ExperimentKind::Activity},
        {"mu-c", ExperimentKind::MuC},         {"suffcond", ExperimentKind::SuffCond},
        {"branching", ExperimentKind::Branching}, {"tree-pack", ExperimentKind::TreePack},
    };
    auto it = table.find(name);
    if (it == table.end()) throw ConfigError("unknown experiment kind '" + name + "'");
    return it->second;
}

FlatConfig parse_flat_config(const std::string& text, const std::string& source_name) {
    const size_t first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(text);
        } catch (const nlohmann::json::parse_error& e) {
            throw ConfigError(source_name + ": JSON parse error: " + e.what());
        }
        if (!j.is_object()) throw ConfigError(source_name + ": top-level JSON must be an object");
        FlatConfig out;
        flatten_json(j, "", out, source_name);
        return out;
    }

    FlatConfig out;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(source_name + ":" + std::to_string(line_no) +
                              ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError(source_name + ":" + std::to_string(line_no) + ": empty key");
        if (out.count(key))
            throw ConfigError(source_name + ":" + std::to_string(line_no) + ": duplicate key '" +
                              key + "'");
        out[key] = value;
    }
    return out;
}

RunConfig config_from_flat(const FlatConfig& flat, const std::string& source_name) {
    FieldReader f(flat, source_name);
    RunConfig c;
    c.kind = kind_from_name(f.required("kind"));

    if (!f.has("seed")) bad_field(source_name, "seed", "required but missing (no clock default)");
    c.seed = f.uinteger("seed", 0);
    c.trials = f.integer("trials", c.trials);
    c.out_dir = f.str("out", c.out_dir);
    c.step_budget = f.uinteger("budget.steps", c.step_budget);
    c.parallel = static_cast<int>(f.integer("parallel", c.parallel));
    c.dump_tape = f.flag("dump_tape", c.dump_tape);

    if (c.uses_graph()) {
        const std::string family = f.str("graph.family", "line");
        if (family == "line")
            c.graph.family = GraphFamily::Line;
        else if (family == "lattice")
            c.graph.family = GraphFamily::Lattice;
        else if (family == "tree")
            c.graph.family = GraphFamily::RegularTree;
        else
            bad_field(source_name, "graph.family", "expected line|lattice|tree, got '" + family + "'");
        c.graph.dimension = static_cast<int>(f.integer("graph.dimension", c.graph.dimension));
        c.graph.degree = static_cast<int>(f.integer("graph.degree", c.graph.degree));
        c.graph.radius = static_cast<int>(f.integer("graph.radius", c.graph.radius));
        c.graph.vertex_budget = f.integer("graph.vertex_budget", c.graph.vertex_budget);
        const std::string jump = f.str("graph.jump", "uniform");
        if (jump == "uniform")
            c.graph.jump_kind = JumpKind::Uniform;
        else if (jump == "totally-asymmetric")
            c.graph.jump_kind = JumpKind::TotallyAsymmetric;
        else
            bad_field(source_name, "graph.jump",
                      "expected uniform|totally-asymmetric, got '" + jump + "'");

        c.model.mu = f.num("model.mu", c.model.mu);
        c.model.lambda = f.num("model.lambda", c.model.lambda);
        const std::string init = f.str("model.init", "bernoulli");
        if (init == "bernoulli")
            c.model.init = InitKind::Bernoulli;
        else if (init == "shifted-geometric")
            c.model.init = InitKind::ShiftedGeometric;
        else
            bad_field(source_name, "model.init",
                      "expected bernoulli|shifted-geometric, got '" + init + "'");
    }

    c.rw_horizon = f.integer("rw.horizon", c.rw_horizon);
    c.activity_theta = f.integer("activity.theta", c.activity_theta);
    c.activity_mask_sleeps = f.flag("activity.mask_sleeps", c.activity_mask_sleeps);

    c.muc.lo = f.num("muc.lo", c.muc.lo);
    c.muc.hi = f.num("muc.hi", c.muc.hi);
    c.muc.tol = f.num("muc.tol", c.muc.tol);
    c.muc.theta = f.integer("muc.theta", c.muc.theta);
    c.muc.cutoff = f.num("muc.cutoff", c.muc.cutoff);
    c.muc.trials_per_point = f.integer("muc.trials_per_point", c.muc.trials_per_point);

    c.branching.fanout = static_cast<int>(f.integer("branching.fanout", c.branching.fanout));
    c.branching.advance_prob = f.num("branching.advance_prob", c.branching.advance_prob);
    c.branching.beta = f.num("branching.beta", c.branching.beta);
    c.branching.max_steps = f.integer("branching.max_steps", c.branching.max_steps);
    c.branching.token_budget = f.integer("budget.tokens", c.branching.token_budget);
    c.branching_prefix_steps = f.integer("branching.prefix_steps", c.branching_prefix_steps);

    const std::string upper = f.str("qbounds.upper", "auto");
    if (upper == "auto")
        c.qbounds_upper = RunConfig::UpperMode::Auto;
    else if (upper == "on")
        c.qbounds_upper = RunConfig::UpperMode::On;
    else if (upper == "off")
        c.qbounds_upper = RunConfig::UpperMode::Off;
    else
        bad_field(source_name, "qbounds.upper", "expected auto|on|off, got '" + upper + "'");

    const std::string order = f.str("stabilize.order", "fifo");
    if (order == "fifo")
        c.stabilize_order = ToppleOrder::Fifo;
    else if (order == "random")
        c.stabilize_order = ToppleOrder::Random;
    else if (order == "deepest")
        c.stabilize_order = ToppleOrder::DeepestFirst;
    else
        bad_field(source_name, "stabilize.order", "expected fifo|random|deepest, got '" + order + "'");

    f.finish();
    try {
        c.validate();
    } catch (const std::exception& e) {
        throw ConfigError(source_name + ": " + e.what());
    }
    return c;
}

void RunConfig::validate() const {
    if (trials < 1) throw std::invalid_argument("trials must be >= 1");
    if (parallel < 1) throw std::invalid_argument("parallel width must be >= 1");
    if (uses_graph()) {
        model.validate();
        Graph::build(graph);  // surfaces geometry errors early
    }
    if (kind == ExperimentKind::TreePack) {
        if (graph.family != GraphFamily::RegularTree)
            throw std::invalid_argument("tree-pack requires graph.family = tree");
        if (model.init != InitKind::ShiftedGeometric)
            throw std::invalid_argument("tree-pack requires model.init = shifted-geometric");
    }
    if (kind == ExperimentKind::QBounds && qbounds_upper == UpperMode::On &&
        !is_transient_family(graph))
        throw std::invalid_argument("q-bounds upper check requires a transient family");
}

FlatConfig config_to_flat(const RunConfig& c) {
    FlatConfig out;
    auto put_num = [&](const std::string& key, double v) {
        std::ostringstream os;
        os.precision(17);
        os << v;
        out[key] = os.str();
    };
    out["kind"] = kind_name(c.kind);
    out["seed"] = std::to_string(c.seed);
    out["trials"] = std::to_string(c.trials);
    out["out"] = c.out_dir;
    out["budget.steps"] = std::to_string(c.step_budget);
    out["parallel"] = std::to_string(c.parallel);
    if (c.dump_tape) out["dump_tape"] = "true";
    if (c.uses_graph()) {
        out["graph.family"] = c.graph.family == GraphFamily::Line      ? "line"
                              : c.graph.family == GraphFamily::Lattice ? "lattice"
                                                                       : "tree";
        out["graph.dimension"] = std::to_string(c.graph.dimension);
        out["graph.degree"] = std::to_string(c.graph.degree);
        out["graph.radius"] = std::to_string(c.graph.radius);
        out["graph.jump"] =
            c.graph.jump_kind == JumpKind::Uniform ? "uniform" : "totally-asymmetric";
        out["graph.vertex_budget"] = std::to_string(c.graph.vertex_budget);
        put_num("model.mu", c.model.mu);
        put_num("model.lambda", c.model.lambda);
        out["model.init"] =
            c.model.init == InitKind::Bernoulli ? "bernoulli" : "shifted-geometric";
    }
    switch (c.kind) {
        case ExperimentKind::RwStats:
            out["rw.horizon"] = std::to_string(c.rw_horizon);
            break;
        case ExperimentKind::Stabilize:
            out["stabilize.order"] = c.stabilize_order == ToppleOrder::Fifo     ? "fifo"
                                     : c.stabilize_order == ToppleOrder::Random ? "random"
                                                                                : "deepest";
            break;
        case ExperimentKind::QBounds:
            out["qbounds.upper"] = c.qbounds_upper == RunConfig::UpperMode::Auto ? "auto"
                                   : c.qbounds_upper == RunConfig::UpperMode::On ? "on"
                                                                                 : "off";
            break;
        case ExperimentKind::Activity:
            out["activity.theta"] = std::to_string(c.activity_theta);
            if (c.activity_mask_sleeps) out["activity.mask_sleeps"] = "true";
            break;
        case ExperimentKind::MuC:
            put_num("muc.lo", c.muc.lo);
            put_num("muc.hi", c.muc.hi);
            put_num("muc.tol", c.muc.tol);
            out["muc.theta"] = std::to_string(c.muc.theta);
            put_num("muc.cutoff", c.muc.cutoff);
            out["muc.trials_per_point"] = std::to_string(c.muc.trials_per_point);
            break;
        case ExperimentKind::SuffCond:
            break;
        case ExperimentKind::Branching:
            out["branching.fanout"] = std::to_string(c.branching.fanout);
            put_num("branching.advance_prob", c.branching.advance_prob);
            put_num("branching.beta", c.branching.beta);
            out["branching.max_steps"] = std::to_string(c.branching.max_steps);
            out["budget.tokens"] = std::to_string(c.branching.token_budget);
            out["branching.prefix_steps"] = std::to_string(c.branching_prefix_steps);
            break;
        case ExperimentKind::TreePack:
            break;
    }
    return out;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return config_from_flat(parse_flat_config(buf.str(), path), path);
}

}  // namespace arw
