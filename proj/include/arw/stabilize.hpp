// Stabilization procedures. All of them drive a SimContext by consuming
// instructions at unstable sites; the Abelian property makes the final
// configuration and odometer independent of the toppling order, which the
// test suite checks exhaustively on small instances.
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "arw/core.hpp"

namespace arw {

enum class ToppleOrder { Fifo, Random, DeepestFirst };

struct StabilizationReport {
    std::vector<SiteState> final_state;
    std::vector<uint64_t> odometer;
    std::vector<uint8_t> sleeping;  // per-site indicator
    uint64_t origin_topplings = 0;
    int64_t absorbed = 0;
    uint64_t steps = 0;
};

// Topple unstable sites of K until K is stable. Particles that jump out of K
// stay where they land; particles that jump out of the ball are deleted.
StabilizationReport stabilize(SimContext& ctx, std::span<const VertexId> K,
                              ToppleOrder order = ToppleOrder::Fifo, uint64_t order_seed = 0);

// Convenience: stabilize the whole ball.
StabilizationReport stabilize_ball(SimContext& ctx, ToppleOrder order = ToppleOrder::Fifo,
                                   uint64_t order_seed = 0);

// Topple unstable sites of K \ {x}, and x only while it holds two or more
// active particles, until the configuration is weakly stable for (x, K):
// state(x) <= one active particle and every other site of K stable.
void weak_stabilize(SimContext& ctx, VertexId x, std::span<const VertexId> K,
                    ToppleOrder order = ToppleOrder::Fifo, uint64_t order_seed = 0);

struct WeakStabReport {
    // Number of weak stabilizations performed until K became stable.
    uint64_t rounds = 0;
    // Odometer snapshot after each weak stabilization; the last entry is the
    // final odometer of the complete stabilization.
    std::vector<std::vector<uint64_t>> round_odometers;
    bool site_ends_sleeping = false;  // x ends sleeping rather than empty
    std::vector<SiteState> final_state;
    std::vector<uint64_t> final_odometer;
    uint64_t steps = 0;
};

// Stabilize K by alternating weak stabilizations of (x, K) with single
// topplings at x. Produces the same final state and odometer as stabilize()
// on the same tape.
WeakStabReport stabilize_via_weak(SimContext& ctx, VertexId x, std::span<const VertexId> K,
                                  bool keep_snapshots = true);

struct GhostReport {
    uint64_t w_visits = 0;        // visits to the origin by particles or ghosts
    uint64_t r_visits = 0;        // visits to the origin by ghosts alone
    uint64_t ghosts_created = 0;
    int64_t net() const { return static_cast<int64_t>(w_visits) - static_cast<int64_t>(r_visits); }
};

// Stabilize the ball, then launch one ghost walker from every site that ended
// with a sleeping particle; ghosts walk until leaving the ball. W counts
// origin visits by real particles plus ghosts, R by ghosts alone, so W - R is
// the number of origin visits the real particles made. Requires a transient
// family.
GhostReport ghost_estimate_transient(const Graph& g, const ModelParams& params, uint64_t seed,
                                     uint64_t step_budget = kDefaultStepBudget);

struct GhostAssociation {
    VertexId associated_site;  // where the sleeping particle started its move
    VertexId created_at;       // where it fell asleep
    bool hit_origin = false;
};

struct LayeredReport {
    GhostReport ghost;
    uint64_t origin_stops = 0;  // particles that stopped at the origin (= W - R)
    std::vector<uint32_t> movers_per_level;  // indexed by level n = 0..L
    std::vector<GhostAssociation> ghosts;
    int64_t absorbed = 0;
    uint64_t steps = 0;
    std::vector<SiteState> final_state;
    std::vector<uint64_t> odometer;
};

// Level-by-level stabilization sweep: particles of the outermost sphere are
// moved first, each until it reaches the origin, settles on an empty site
// closer in, falls asleep outside the already-processed region, or leaves the
// ball. A ghost is spawned when a particle that started its move from an
// initially empty site stops by falling asleep; ghosts then walk until they
// reach the origin or leave the ball. The sweep is a legal prefix of a full
// stabilization, so origin stops never exceed the full origin odometer on the
// same tape.
LayeredReport layered_stabilize(const Graph& g, const ModelParams& params, uint64_t seed,
                                uint64_t step_budget = kDefaultStepBudget);

enum class PackFailure { None, NoSleepBeforeCorrupted, ParticleInsideCorrupted };

struct PackOutcome {
    // Per-particle result of the packing walk.
    enum Kind : uint8_t { Exited, Packed } kind;
    VertexId rest_site;  // for Packed, where the particle ended up sleeping
};

struct PackReport {
    bool success = false;
    PackFailure failure = PackFailure::None;
    std::vector<int64_t> corrupted_size_history;  // |C_k| after each move
    std::vector<PackOutcome> outcomes;
    int64_t particles_moved = 0;
    int64_t particles_total = 0;
    int64_t exited = 0;
    int64_t packed = 0;
    bool origin_untouched = false;
    uint64_t steps = 0;
};

// Tree packing: discover particles in order of distance to the origin and
// walk each one while ignoring sleep instructions, until it leaves the ball
// or hits the corrupted set. Hitting the corrupted set rolls the particle
// back to the last ignored sleep position and corrupts every vertex observed
// past it. Fails when a particle reaches the corrupted set without ever
// seeing a sleep instruction, or when a not-yet-moved particle sits inside
// the grown corrupted set. On success the origin's instruction stack was
// never touched. Requires a regular tree and the shifted-geometric initial
// condition.
PackReport tree_pack_stabilize(const Graph& g, const ModelParams& params, uint64_t seed,
                               uint64_t step_budget = kDefaultStepBudget);

}  // namespace arw
