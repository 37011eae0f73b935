#include "arw/walks.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "arw/parallel.hpp"
#include "arw/rng.hpp"

namespace arw {

RwStats estimate_rw_stats(const Graph& g, int64_t trials, int64_t horizon, uint64_t seed,
                          int parallel) {
    if (trials < 1) throw std::invalid_argument("estimate_rw_stats: trials must be >= 1");
    if (horizon < 1) throw std::invalid_argument("estimate_rw_stats: horizon must be >= 1");

    std::vector<double> visits(static_cast<size_t>(trials));
    std::vector<double> nonret(static_cast<size_t>(trials));
    std::vector<double> drift_gain(static_cast<size_t>(trials));
    std::vector<double> drift_steps(static_cast<size_t>(trials));
    std::vector<uint8_t> capped(static_cast<size_t>(trials), 0);

    const VertexId origin = g.origin();
    run_trials(trials, parallel, [&](int64_t t) {
        rng::CounterRng r(rng::hash3(seed, rng::kWalkStream, static_cast<uint64_t>(t)));
        VertexId v = origin;
        int64_t steps = 0;
        double visit_count = 1.0;  // the start counts as a visit
        bool returned = false;
        double gain = 0.0, away_steps = 0.0;
        for (;;) {
            if (steps >= horizon) {
                capped[static_cast<size_t>(t)] = 1;
                break;
            }
            const int slot = static_cast<int>(r.next_below(static_cast<uint32_t>(g.jump_slots())));
            const VertexId next = g.jump_target(v, slot);
            ++steps;
            const int from_dist = g.distance(v);
            const int to_dist = (next == kExterior) ? g.radius() + 1 : g.distance(next);
            if (from_dist >= 1) {
                gain += to_dist - from_dist;
                away_steps += 1.0;
            }
            if (next == kExterior) break;
            v = next;
            if (v == origin) {
                visit_count += 1.0;
                returned = true;
            }
        }
        visits[static_cast<size_t>(t)] = visit_count;
        nonret[static_cast<size_t>(t)] = returned ? 0.0 : 1.0;
        drift_gain[static_cast<size_t>(t)] = gain;
        drift_steps[static_cast<size_t>(t)] = away_steps;
    });

    RwStats out;
    out.trials = trials;
    out.seed = seed;
    out.green_visits = mean_estimate(visits);
    out.nonreturn = mean_estimate(nonret);
    for (uint8_t c : capped) out.horizon_capped += c;

    // Speed as total outward gain over total away-steps (ratio of sums with a
    // delta-method error). Exit ratios distance/steps carry an O(1/radius)
    // finite-volume bias; the per-step drift does not.
    const Estimate d_mean = mean_estimate(drift_gain);
    const Estimate s_mean = mean_estimate(drift_steps);
    const double ratio = (s_mean.value > 0.0) ? d_mean.value / s_mean.value : 0.0;
    double cov = 0.0;
    for (int64_t t = 0; t < trials; ++t)
        cov += (drift_gain[static_cast<size_t>(t)] - d_mean.value) *
               (drift_steps[static_cast<size_t>(t)] - s_mean.value);
    if (trials > 1) cov /= static_cast<double>(trials - 1) * static_cast<double>(trials);
    const double var_d = d_mean.std_error * d_mean.std_error;
    const double var_s = s_mean.std_error * s_mean.std_error;
    double var_ratio = 0.0;
    if (s_mean.value > 0.0)
        var_ratio = (var_d - 2.0 * ratio * cov + ratio * ratio * var_s) /
                    (s_mean.value * s_mean.value);
    out.speed.value = ratio;
    out.speed.std_error = var_ratio > 0.0 ? std::sqrt(var_ratio) : 0.0;
    out.speed.trials = trials;
    return out;
}

Estimate hitting_prob(const Graph& g, VertexId source, VertexId target, int64_t trials,
                      uint64_t seed, int parallel) {
    if (trials < 1) throw std::invalid_argument("hitting_prob: trials must be >= 1");
    if (source == target) return Estimate{1.0, 0.0, trials};

    std::vector<uint8_t> hit(static_cast<size_t>(trials), 0);
    run_trials(trials, parallel, [&](int64_t t) {
        rng::CounterRng r(rng::hash3(seed, rng::kWalkStream, static_cast<uint64_t>(t)));
        VertexId v = source;
        for (;;) {
            const int slot = static_cast<int>(r.next_below(static_cast<uint32_t>(g.jump_slots())));
            const VertexId next = g.jump_target(v, slot);
            if (next == kExterior) break;
            if (next == target) {
                hit[static_cast<size_t>(t)] = 1;
                break;
            }
            v = next;
        }
    });
    int64_t hits = 0;
    for (uint8_t h : hit) hits += h;
    return fraction_estimate(hits, trials);
}

double tree_hitting_exact(const Graph& g, int ell) {
    if (g.spec().family != GraphFamily::RegularTree)
        throw std::invalid_argument("exact hitting probability requires a regular tree");
    if (ell < 0) throw std::invalid_argument("tree_hitting_exact: ell must be >= 0");
    return std::pow(1.0 / (g.spec().degree - 1), ell);
}

double tree_green_exact(int degree) {
    if (degree < 3) throw std::invalid_argument("tree_green_exact: degree must be >= 3");
    return static_cast<double>(degree - 1) / static_cast<double>(degree - 2);
}

}  // namespace arw
