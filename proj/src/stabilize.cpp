#include "arw/stabilize.hpp"

#include <algorithm>
#include <cassert>
#include <deque>
#include <queue>

namespace arw {

namespace {

// Worklist driver shared by plain and weak stabilization. `wants_topple`
// decides whether a site currently needs attention; the driver keeps toppling
// until no site in K wants anything. Any order policy is correct (Abelian),
// they exist so the tests can prove exactly that.
template <class WantsTopple>
void drive(SimContext& ctx, std::span<const VertexId> K, WantsTopple wants_topple,
           ToppleOrder order, uint64_t order_seed) {
    const int32_t n = ctx.graph->vertex_count();
    std::vector<uint8_t> in_K(static_cast<size_t>(n), 0);
    for (VertexId v : K) in_K[static_cast<size_t>(v)] = 1;
    std::vector<uint8_t> queued(static_cast<size_t>(n), 0);

    std::deque<VertexId> fifo;
    std::vector<VertexId> bag;  // random order
    using DeepEntry = std::pair<int, VertexId>;
    std::priority_queue<DeepEntry> deep;  // (distance, id), deepest first

    auto push = [&](VertexId v) {
        if (queued[static_cast<size_t>(v)]) return;
        queued[static_cast<size_t>(v)] = 1;
        switch (order) {
            case ToppleOrder::Fifo: fifo.push_back(v); break;
            case ToppleOrder::Random: bag.push_back(v); break;
            case ToppleOrder::DeepestFirst: deep.emplace(ctx.graph->distance(v), v); break;
        }
    };

    rng::CounterRng pick(rng::hash2(order_seed, rng::kOrderStream));
    auto pop = [&]() -> VertexId {
        VertexId v = kExterior;
        switch (order) {
            case ToppleOrder::Fifo:
                v = fifo.front();
                fifo.pop_front();
                break;
            case ToppleOrder::Random: {
                const uint32_t i = pick.next_below(static_cast<uint32_t>(bag.size()));
                v = bag[i];
                bag[i] = bag.back();
                bag.pop_back();
                break;
            }
            case ToppleOrder::DeepestFirst:
                v = deep.top().second;
                deep.pop();
                break;
        }
        queued[static_cast<size_t>(v)] = 0;
        return v;
    };
    auto empty = [&] {
        switch (order) {
            case ToppleOrder::Fifo: return fifo.empty();
            case ToppleOrder::Random: return bag.empty();
            case ToppleOrder::DeepestFirst: return deep.empty();
        }
        return true;
    };

    for (VertexId v : K)
        if (wants_topple(v)) push(v);

    while (!empty()) {
        const VertexId x = pop();
        if (!wants_topple(x)) continue;
        const ToppleOutcome out = topple(ctx, x);
        if (wants_topple(x)) push(x);
        if (out.effect == ToppleEffect::Jumped && in_K[static_cast<size_t>(out.target)] &&
            wants_topple(out.target))
            push(out.target);
    }
}

std::vector<uint8_t> sleeping_indicator(const ParticleConfig& cfg) {
    std::vector<uint8_t> out(cfg.states().size(), 0);
    for (size_t v = 0; v < cfg.states().size(); ++v)
        if (cfg.states()[v] == kSleeping) out[v] = 1;
    return out;
}

}  // namespace

StabilizationReport stabilize(SimContext& ctx, std::span<const VertexId> K, ToppleOrder order,
                              uint64_t order_seed) {
    const uint64_t steps_before = ctx.steps_used;
    drive(
        ctx, K, [&](VertexId v) { return is_unstable(ctx.config.state(v)); }, order, order_seed);
    StabilizationReport rep;
    rep.final_state = ctx.config.states();
    rep.odometer = ctx.odometer.used;
    rep.sleeping = sleeping_indicator(ctx.config);
    rep.origin_topplings = ctx.odometer.at(ctx.graph->origin());
    rep.absorbed = ctx.config.absorbed_particles();
    rep.steps = ctx.steps_used - steps_before;
    assert(ctx.config.stable_on(K));
    return rep;
}

StabilizationReport stabilize_ball(SimContext& ctx, ToppleOrder order, uint64_t order_seed) {
    return stabilize(ctx, ctx.graph->by_distance(), order, order_seed);
}

void weak_stabilize(SimContext& ctx, VertexId x, std::span<const VertexId> K, ToppleOrder order,
                    uint64_t order_seed) {
    bool x_in_K = false;
    for (VertexId v : K) x_in_K |= (v == x);
    if (!x_in_K) throw std::invalid_argument("weak_stabilize: x must belong to K");
    drive(
        ctx, K,
        [&, x](VertexId v) {
            const SiteState s = ctx.config.state(v);
            return v == x ? s >= 2 : is_unstable(s);
        },
        order, order_seed);
}

WeakStabReport stabilize_via_weak(SimContext& ctx, VertexId x, std::span<const VertexId> K,
                                  bool keep_snapshots) {
    WeakStabReport rep;
    const uint64_t steps_before = ctx.steps_used;
    for (;;) {
        weak_stabilize(ctx, x, K);
        rep.rounds += 1;
        if (keep_snapshots) rep.round_odometers.push_back(ctx.odometer.used);
        if (ctx.config.state(x) != 1) break;  // stable: x empty or sleeping
        // x holds a lone active particle; resolve it with the next effective
        // instruction (neutral reads keep the configuration unchanged).
        bool slept = false, jumped = false;
        while (ctx.config.state(x) == 1 && !slept && !jumped) {
            const ToppleOutcome out = topple(ctx, x);
            slept = out.effect == ToppleEffect::Slept;
            jumped = out.effect == ToppleEffect::Jumped || out.effect == ToppleEffect::JumpedAbsorbed;
        }
        if (slept) break;  // the sleep concluded the stabilization of K
    }
    rep.site_ends_sleeping = ctx.config.state(x) == kSleeping;
    rep.final_state = ctx.config.states();
    rep.final_odometer = ctx.odometer.used;
    if (keep_snapshots) rep.round_odometers.push_back(ctx.odometer.used);
    rep.steps = ctx.steps_used - steps_before;
    return rep;
}

GhostReport ghost_estimate_transient(const Graph& g, const ModelParams& params, uint64_t seed,
                                     uint64_t step_budget) {
    if (!is_transient_family(g.spec()))
        throw std::invalid_argument("ghost estimator requires a transient family");
    SimContext ctx = make_context(g, params, seed, step_budget);
    const VertexId origin = g.origin();
    const int64_t initially_at_origin = std::max<SiteState>(ctx.config.state(origin), 0);
    stabilize_ball(ctx);

    // Origin visits by real particles: the initial occupants plus every jump
    // that landed on the origin. Arrivals are recovered from the consumed
    // tape prefixes of the origin's neighbors, so the hot loop needs no hook.
    uint64_t particle_visits = static_cast<uint64_t>(initially_at_origin);
    for (int slot = 0; slot < g.degree(); ++slot) {
        const VertexId u = g.neighbor(origin, slot);
        if (u == kExterior) continue;
        for (uint64_t j = 1; j <= ctx.odometer.at(u); ++j) {
            const Instruction ins = ctx.tape.read(u, j);
            if (ins.kind == InstrKind::Jump && g.jump_target(u, ins.slot) == origin)
                ++particle_visits;
        }
    }

    GhostReport rep;
    uint64_t ghost_index = 0;
    for (VertexId v = 0; v < g.vertex_count(); ++v) {
        if (ctx.config.state(v) != kSleeping) continue;
        rng::CounterRng walk(rng::hash3(seed, rng::kGhostStream, ghost_index++));
        VertexId pos = v;
        uint64_t visits = (pos == origin) ? 1 : 0;
        for (;;) {
            const int slot = static_cast<int>(walk.next_below(static_cast<uint32_t>(g.jump_slots())));
            const VertexId next = g.jump_target(pos, slot);
            if (next == kExterior) break;
            pos = next;
            if (pos == origin) ++visits;
        }
        rep.r_visits += visits;
    }
    rep.ghosts_created = ghost_index;
    rep.w_visits = particle_visits + rep.r_visits;
    return rep;
}

LayeredReport layered_stabilize(const Graph& g, const ModelParams& params, uint64_t seed,
                                uint64_t step_budget) {
    SimContext ctx = make_context(g, params, seed, step_budget);
    const VertexId origin = g.origin();
    const int L = g.radius();
    const std::vector<SiteState> initial_state = ctx.config.states();

    LayeredReport rep;
    rep.movers_per_level.assign(static_cast<size_t>(L) + 1, 0);

    for (int n = L; n >= 1; --n) {
        // Snapshot the movers of this level before any of them is moved.
        std::vector<std::pair<VertexId, int32_t>> movers;
        for (VertexId z : g.sphere(n)) {
            const SiteState s = ctx.config.state(z);
            if (s >= 1) {
                movers.emplace_back(z, s);
                rep.movers_per_level[static_cast<size_t>(n)] += static_cast<uint32_t>(s);
            }
        }
        for (const auto& [z, count] : movers) {
            for (int32_t unit = 0; unit < count; ++unit) {
                assert(ctx.config.state(z) >= 1);
                VertexId u = z;
                for (;;) {
                    const ToppleOutcome out = topple(ctx, u);
                    if (out.effect == ToppleEffect::Slept) {
                        // Stopping rule: fell asleep outside the processed
                        // region. A ghost is owed when the move began on an
                        // initially empty site.
                        assert(g.distance(u) >= n);
                        if (initial_state[static_cast<size_t>(z)] == 0)
                            rep.ghosts.push_back({z, u, false});
                        break;
                    }
                    if (out.effect == ToppleEffect::SleptNoop || out.effect == ToppleEffect::Neutral)
                        continue;  // instruction burned, keep moving
                    if (out.effect == ToppleEffect::JumpedAbsorbed) break;  // reached the exterior
                    const VertexId t = out.target;
                    if (t == origin) {
                        ++rep.origin_stops;  // stops for good, stays active
                        break;
                    }
                    // Settles on a site that was empty and lies strictly
                    // inside the current level.
                    if (ctx.config.state(t) == 1 && g.distance(t) <= n - 1) break;
                    u = t;
                }
            }
        }
    }

    // Ghost walks: independent randomness, stop at the origin or outside.
    for (size_t i = 0; i < rep.ghosts.size(); ++i) {
        rng::CounterRng walk(rng::hash3(seed, rng::kGhostStream, i));
        VertexId pos = rep.ghosts[i].created_at;
        for (;;) {
            const int slot = static_cast<int>(walk.next_below(static_cast<uint32_t>(g.jump_slots())));
            const VertexId next = g.jump_target(pos, slot);
            if (next == kExterior) break;
            if (next == origin) {
                rep.ghosts[i].hit_origin = true;
                rep.ghost.r_visits += 1;
                break;
            }
            pos = next;
        }
    }
    rep.ghost.ghosts_created = rep.ghosts.size();
    rep.ghost.w_visits = rep.origin_stops + rep.ghost.r_visits;
    rep.absorbed = ctx.config.absorbed_particles();
    rep.steps = ctx.steps_used;
    rep.final_state = ctx.config.states();
    rep.odometer = ctx.odometer.used;
    return rep;
}

PackReport tree_pack_stabilize(const Graph& g, const ModelParams& params, uint64_t seed,
                               uint64_t step_budget) {
    if (g.spec().family != GraphFamily::RegularTree)
        throw std::invalid_argument("tree packing requires a regular tree");
    if (params.init != InitKind::ShiftedGeometric)
        throw std::invalid_argument("tree packing requires the shifted-geometric initial condition");
    SimContext ctx = make_context(g, params, seed, step_budget);
    const VertexId origin = g.origin();

    PackReport rep;
    // Particles ordered by (distance, vertex id); several can share a vertex.
    std::vector<VertexId> particles;
    for (VertexId v : g.by_distance())
        for (SiteState k = 0; k < ctx.config.state(v); ++k) particles.push_back(v);
    rep.particles_total = static_cast<int64_t>(particles.size());

    std::vector<uint8_t> corrupted(static_cast<size_t>(g.vertex_count()), 0);
    corrupted[static_cast<size_t>(origin)] = 1;
    int64_t corrupted_size = 1;

    auto fail = [&](PackFailure cause) {
        rep.failure = cause;
        rep.success = false;
        rep.origin_untouched = ctx.odometer.at(origin) == 0;
        rep.steps = ctx.steps_used;
        return rep;
    };

    // A particle sitting in the corrupted set at discovery time sinks the
    // whole procedure; the initial set is just the origin.
    for (size_t i = 0; i < particles.size(); ++i)
        if (corrupted[static_cast<size_t>(particles[i])])
            return fail(PackFailure::ParticleInsideCorrupted);

    for (size_t i = 0; i < particles.size(); ++i) {
        const VertexId start = particles[i];
        std::vector<VertexId> path{start};
        int64_t last_sleep = -1;  // index into path of the last ignored sleep
        bool exited = false;
        VertexId rest = kExterior;
        for (;;) {
            const VertexId u = path.back();
            if (++ctx.steps_used > ctx.step_budget) throw StepBudgetExceeded(ctx.step_budget);
            const Instruction ins = ctx.tape.read(u, ctx.odometer.at(u) + 1);
            ctx.odometer.bump(u);
            if (ins.kind == InstrKind::Sleep) {
                last_sleep = static_cast<int64_t>(path.size()) - 1;
                continue;  // ignored, but remembered as a stopping anchor
            }
            const VertexId t = g.jump_target(u, ins.slot);
            if (t == kExterior) {
                exited = true;
                break;
            }
            if (corrupted[static_cast<size_t>(t)]) {
                if (last_sleep < 0) return fail(PackFailure::NoSleepBeforeCorrupted);
                // Roll back to the last ignored sleep; every vertex observed
                // from there on has a burned instruction stack.
                for (size_t p = static_cast<size_t>(last_sleep); p < path.size(); ++p) {
                    if (!corrupted[static_cast<size_t>(path[p])]) {
                        corrupted[static_cast<size_t>(path[p])] = 1;
                        ++corrupted_size;
                    }
                }
                rest = path[static_cast<size_t>(last_sleep)];
                break;
            }
            path.push_back(t);
        }
        rep.particles_moved += 1;
        if (exited) {
            ctx.config.depart(start);
            ctx.config.absorb();
            rep.exited += 1;
            rep.outcomes.push_back({PackOutcome::Exited, kExterior});
        } else {
            // The corrupted set grew: any undiscovered particle inside it
            // fails the procedure before the sleeper is placed.
            for (size_t j = i + 1; j < particles.size(); ++j)
                if (corrupted[static_cast<size_t>(particles[j])]) {
                    rep.corrupted_size_history.push_back(corrupted_size);
                    return fail(PackFailure::ParticleInsideCorrupted);
                }
            ctx.config.depart(start);
            assert(ctx.config.state(rest) == 0);
            ctx.config.seed_sleeping(rest);
            rep.packed += 1;
            rep.outcomes.push_back({PackOutcome::Packed, rest});
        }
        rep.corrupted_size_history.push_back(corrupted_size);
    }

    rep.success = true;
    rep.origin_untouched = ctx.odometer.at(origin) == 0;
    assert(rep.origin_untouched);
    rep.steps = ctx.steps_used;
    return rep;
}

}  // namespace arw
