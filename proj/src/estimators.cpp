#include "arw/estimators.hpp"

#include <algorithm>
#include <cmath>

#include "arw/parallel.hpp"

namespace arw {

QBoundsResult estimate_q_and_check_bounds(const Graph& g, VertexId x,
                                          std::span<const VertexId> K, const ModelParams& params,
                                          int64_t trials, uint64_t seed, bool check_upper,
                                          double green_value, double green_std_error, int parallel,
                                          uint64_t step_budget) {
    params.validate();
    if (trials < 1) throw std::invalid_argument("estimate_q: trials must be >= 1");
    if (check_upper && !is_transient_family(g.spec()))
        throw std::invalid_argument("the upper bound on Q holds on transient families only");

    std::vector<uint8_t> slept(static_cast<size_t>(trials), 0);
    std::vector<uint8_t> toppled(static_cast<size_t>(trials), 0);
    run_trials(trials, parallel, [&](int64_t t) {
        SimContext ctx = make_context(g, params, rng::trial_seed(seed, static_cast<uint64_t>(t)),
                                      step_budget);
        stabilize(ctx, K);
        slept[static_cast<size_t>(t)] = ctx.config.state(x) == kSleeping ? 1 : 0;
        toppled[static_cast<size_t>(t)] = ctx.odometer.at(x) >= 1 ? 1 : 0;
    });

    QBoundsResult out;
    out.trials = trials;
    out.seed = seed;
    int64_t s = 0, m = 0;
    for (int64_t t = 0; t < trials; ++t) {
        s += slept[static_cast<size_t>(t)];
        m += toppled[static_cast<size_t>(t)];
    }
    out.q = fraction_estimate(s, trials);
    out.toppled = fraction_estimate(m, trials);
    const double sp = params.sleep_prob();
    out.lower =
        check_lower("q_lower_bound", out.q, sp * out.toppled.value, sp * out.toppled.std_error);
    if (check_upper) {
        out.green_value = green_value;
        const double inner = params.lambda * (green_value * (1.0 + params.lambda) + 1.0);
        const double bound = 3.0 * std::sqrt(inner);
        double bound_err = 0.0;
        if (green_std_error > 0.0)
            bound_err = 1.5 * params.lambda * (1.0 + params.lambda) / std::sqrt(inner) *
                        green_std_error;
        out.upper = arw::check_upper("q_upper_bound", out.q, bound, bound_err);
    }
    return out;
}

ActivityResult estimate_activity(const Graph& g, const ModelParams& params, int64_t theta,
                                 int64_t trials, uint64_t seed, int parallel,
                                 uint64_t step_budget, bool mask_all_sleeps) {
    params.validate();
    if (theta < 1) throw std::invalid_argument("estimate_activity: theta must be >= 1");
    if (trials < 1) throw std::invalid_argument("estimate_activity: trials must be >= 1");

    std::vector<uint8_t> active(static_cast<size_t>(trials), 0);
    std::vector<double> topplings(static_cast<size_t>(trials), 0.0);
    run_trials(trials, parallel, [&](int64_t t) {
        SimContext ctx = make_context(g, params, rng::trial_seed(seed, static_cast<uint64_t>(t)),
                                      step_budget);
        if (mask_all_sleeps) ctx.tape = apply_sleep_mask(ctx.tape, mask_everything());
        stabilize_ball(ctx);
        const uint64_t m = ctx.odometer.at(g.origin());
        active[static_cast<size_t>(t)] = m >= static_cast<uint64_t>(theta) ? 1 : 0;
        topplings[static_cast<size_t>(t)] = static_cast<double>(m);
    });

    ActivityResult out;
    out.theta = theta;
    out.trials = trials;
    out.seed = seed;
    int64_t hits = 0;
    for (int64_t t = 0; t < trials; ++t) hits += active[static_cast<size_t>(t)];
    out.probability = fraction_estimate(hits, trials);
    out.mean_origin_topplings = mean_estimate(topplings);
    return out;
}

MuCResult estimate_mu_c(const Graph& g, double lambda, const BisectionSettings& settings,
                        uint64_t seed, int parallel, uint64_t step_budget) {
    if (!(settings.lo < settings.hi)) throw std::invalid_argument("mu_c: need lo < hi");
    if (!(settings.tol > 0.0)) throw std::invalid_argument("mu_c: need tol > 0");
    if (!(settings.cutoff > 0.0 && settings.cutoff < 1.0))
        throw std::invalid_argument("mu_c: cutoff must lie in (0, 1)");

    MuCResult out;
    out.settings = settings;
    out.seed = seed;

    int scan_index = 0;
    auto classify = [&](double mu) {
        ModelParams p{mu, lambda, InitKind::Bernoulli};
        const uint64_t point_seed = rng::hash3(seed, rng::kScanStream, static_cast<uint64_t>(scan_index++));
        const ActivityResult a = estimate_activity(g, p, settings.theta,
                                                   settings.trials_per_point, point_seed,
                                                   parallel, step_budget);
        out.evaluations.emplace_back(mu, a.probability.value);
        return a.probability.value > settings.cutoff;
    };

    bool lo_active = classify(settings.lo);
    bool hi_active = classify(settings.hi);
    if (lo_active == hi_active)
        throw NoSignChange("both bisection endpoints classify as " +
                           std::string(lo_active ? "active" : "fixating"));

    double lo = settings.lo, hi = settings.hi;
    while (hi - lo > settings.tol) {
        const double mid = 0.5 * (lo + hi);
        if (classify(mid) == hi_active)
            hi = mid;
        else
            lo = mid;
    }
    out.lo = lo;
    out.hi = hi;
    return out;
}

SuffCondEstimate estimate_sufficient_condition(const Graph& g, const ModelParams& params,
                                               int64_t trials, uint64_t seed, int parallel) {
    params.validate();
    if (trials < 1) throw std::invalid_argument("suffcond: trials must be >= 1");
    const int L = g.radius();
    const VertexId origin = g.origin();
    const double sleep_prob = params.sleep_prob();

    // Per-trial visit counts for each sphere, plain and kill-clock limited.
    std::vector<std::vector<double>> n_plain(static_cast<size_t>(L) + 1),
        n_surv(static_cast<size_t>(L) + 1);
    for (int n = 0; n <= L; ++n) {
        n_plain[static_cast<size_t>(n)].assign(static_cast<size_t>(trials), 0.0);
        n_surv[static_cast<size_t>(n)].assign(static_cast<size_t>(trials), 0.0);
    }

    run_trials(trials, parallel, [&](int64_t t) {
        rng::CounterRng walk(rng::hash3(seed, rng::kWalkStream, static_cast<uint64_t>(t)));
        // kill_ceiling = largest radius at which the clock has fired so far;
        // the walk counts as killed for sphere n once kill_ceiling >= n.
        int kill_ceiling = -1;
        VertexId v = origin;
        // Time 0: one visit to the origin's sphere, never killed.
        n_plain[0][static_cast<size_t>(t)] += 1.0;
        n_surv[0][static_cast<size_t>(t)] += 1.0;
        for (;;) {
            const int slot = static_cast<int>(walk.next_below(static_cast<uint32_t>(g.jump_slots())));
            const VertexId next = g.jump_target(v, slot);
            if (next == kExterior) break;
            v = next;
            if (v == origin) break;  // first return ends the count
            const int r = g.distance(v);
            if (walk.next_unit() < sleep_prob) kill_ceiling = std::max(kill_ceiling, r);
            n_plain[static_cast<size_t>(r)][static_cast<size_t>(t)] += 1.0;
            if (r > kill_ceiling) n_surv[static_cast<size_t>(r)][static_cast<size_t>(t)] += 1.0;
        }
    });

    SuffCondEstimate out;
    out.trials = trials;
    out.seed = seed;
    std::vector<double> m_tot(static_cast<size_t>(trials), 0.0),
        m_surv(static_cast<size_t>(trials), 0.0);
    for (int n = 0; n <= L; ++n) {
        out.per_level.push_back(mean_estimate(n_plain[static_cast<size_t>(n)]));
        out.per_level_surviving.push_back(mean_estimate(n_surv[static_cast<size_t>(n)]));
        for (int64_t t = 0; t < trials; ++t) {
            m_tot[static_cast<size_t>(t)] += n_plain[static_cast<size_t>(n)][static_cast<size_t>(t)];
            m_surv[static_cast<size_t>(t)] += n_surv[static_cast<size_t>(n)][static_cast<size_t>(t)];
        }
    }
    out.m_total = mean_estimate(m_tot);
    out.m_surviving = mean_estimate(m_surv);

    // Ratio of means with a delta-method standard error.
    const double ratio = out.m_total.value > 0.0 ? out.m_surviving.value / out.m_total.value : 0.0;
    double cov = 0.0;
    for (int64_t t = 0; t < trials; ++t)
        cov += (m_surv[static_cast<size_t>(t)] - out.m_surviving.value) *
               (m_tot[static_cast<size_t>(t)] - out.m_total.value);
    if (trials > 1) cov /= static_cast<double>(trials - 1) * static_cast<double>(trials);
    double var_ratio = 0.0;
    if (out.m_total.value > 0.0) {
        const double a = out.m_surviving.std_error * out.m_surviving.std_error;
        const double b = out.m_total.std_error * out.m_total.std_error;
        var_ratio = (a - 2.0 * ratio * cov + ratio * ratio * b) /
                    (out.m_total.value * out.m_total.value);
    }
    out.ratio = Estimate{ratio, var_ratio > 0.0 ? std::sqrt(var_ratio) : 0.0, trials};

    const double nu0 = params.empty_prob();
    out.threshold = nu0 / (params.density() + nu0);
    out.condition = check_lower("suffcond_ratio", out.ratio, out.threshold);
    return out;
}

double drift_factor(int fanout, double advance_prob, double beta) {
    if (fanout < 1) throw std::invalid_argument("drift_factor: fanout must be >= 1");
    if (!(advance_prob >= 0.0 && advance_prob <= 1.0))
        throw std::invalid_argument("drift_factor: advance_prob must lie in [0, 1]");
    if (!(beta > 0.0 && beta < 1.0))
        throw std::invalid_argument("drift_factor: beta must lie in (0, 1)");
    const double gamma = std::sqrt(1.0 - beta);
    return advance_prob * gamma +
           (1.0 - advance_prob) * fanout * (1.0 + gamma) / (gamma * (1.0 - gamma));
}

namespace {

// Geometric(beta) on {1, 2, ...} by inversion.
int64_t geometric_depth(double u, double beta) {
    const int64_t ell = static_cast<int64_t>(std::floor(std::log1p(-u) / std::log1p(-beta))) + 1;
    return std::max<int64_t>(ell, 1);
}

}  // namespace

BranchingReport simulate_branching(const BranchingParams& params, int64_t trials, uint64_t seed,
                                   int parallel, int64_t prefix_steps) {
    if (trials < 1) throw std::invalid_argument("branching: trials must be >= 1");
    if (params.fanout < 1) throw std::invalid_argument("branching: fanout must be >= 1");
    if (!(params.beta > 0.0 && params.beta < 1.0))
        throw std::invalid_argument("branching: beta must lie in (0, 1)");
    if (!(params.advance_prob >= 0.0 && params.advance_prob <= 1.0))
        throw std::invalid_argument("branching: advance_prob must lie in [0, 1]");
    const double gamma = std::sqrt(1.0 - params.beta);

    struct TrialResult {
        uint8_t survived = 0, censored = 0, died = 0, prefix_clean = 0;
        int64_t min_position = 1;
        std::vector<double> ratios;
        std::vector<double> trajectory;
    };
    std::vector<TrialResult> results(static_cast<size_t>(trials));

    run_trials(trials, parallel, [&](int64_t t) {
        TrialResult& res = results[static_cast<size_t>(t)];
        rng::CounterRng r(rng::hash3(seed, rng::kBranchStream, static_cast<uint64_t>(t)));
        std::vector<int64_t> tokens(static_cast<size_t>(params.fanout), 1);
        const bool keep_trajectory = (t == 0);
        double psi = params.fanout * gamma;
        if (keep_trajectory) res.trajectory.push_back(psi);
        res.prefix_clean = 1;
        bool dead = false;
        for (int64_t step = 0; step < params.max_steps && !dead; ++step) {
            std::vector<int64_t> next;
            next.reserve(tokens.size());
            double next_psi = 0.0;
            for (int64_t k : tokens) {
                if (r.next_unit() < params.advance_prob) {
                    next.push_back(k + 1);
                    next_psi += std::pow(gamma, static_cast<double>(k + 1));
                } else {
                    if (step < prefix_steps) res.prefix_clean = 0;
                    const int64_t depth = geometric_depth(r.next_unit(), params.beta);
                    const int64_t pos = k - depth;
                    res.min_position = std::min(res.min_position, pos);
                    const int64_t spawn = depth * params.fanout;
                    if (static_cast<int64_t>(next.size()) + spawn > params.token_budget) {
                        res.censored = 1;
                        break;
                    }
                    next.insert(next.end(), static_cast<size_t>(spawn), pos);
                    next_psi += static_cast<double>(spawn) * std::pow(gamma, static_cast<double>(pos));
                    if (pos <= 0) dead = true;
                }
            }
            if (res.censored) break;
            if (params.validate_psi) {
                double recomputed = 0.0;
                for (int64_t k : next) recomputed += std::pow(gamma, static_cast<double>(k));
                const double scale = std::max(std::abs(recomputed), 1e-300);
                if (std::abs(recomputed - next_psi) / scale > 1e-12)
                    throw std::logic_error("incremental Psi diverged from recomputation");
            }
            if (psi > 1e-300) res.ratios.push_back(next_psi / psi);
            psi = next_psi;
            tokens = std::move(next);
            if (keep_trajectory) res.trajectory.push_back(psi);
        }
        res.died = dead ? 1 : 0;
        res.survived = (!dead && !res.censored) ? 1 : 0;
    });

    BranchingReport rep;
    rep.trials = trials;
    rep.seed = seed;
    rep.prefix_steps = prefix_steps;
    int64_t survived = 0, prefix_clean = 0;
    std::vector<double> all_ratios;
    for (const TrialResult& res : results) {
        survived += res.survived;
        rep.censored += res.censored;
        rep.died += res.died;
        prefix_clean += res.prefix_clean;
        rep.min_position = std::min(rep.min_position, res.min_position);
        all_ratios.insert(all_ratios.end(), res.ratios.begin(), res.ratios.end());
    }
    rep.survival = fraction_estimate(survived, trials);
    rep.psi_ratio = mean_estimate(all_ratios);
    rep.psi_samples = static_cast<int64_t>(all_ratios.size());
    rep.psi_trajectory = std::move(results[0].trajectory);
    if (prefix_steps > 0) rep.all_advance_prefix = fraction_estimate(prefix_clean, trials);
    return rep;
}

double pack_matched_advance_prob(int degree, double mu) {
    if (degree < 3) throw std::invalid_argument("matched advance_prob needs a tree degree >= 3");
    if (!(mu > 0.0 && mu < 1.0)) throw std::invalid_argument("matched advance_prob needs mu in (0,1)");
    return std::exp(-mu / ((1.0 - mu) * (degree - 1)));
}

}  // namespace arw
