// Particle configurations and the deterministic instruction machinery that
// drives them. A site holds either nothing, a single sleeping particle, or
// k >= 1 active particles, with the ordering empty < sleeping < 1 < 2 < ...
// Each site owns an infinite stack of pre-drawn instructions; toppling an
// unstable site consumes the next one. Because the stacks are fixed random
// objects keyed by (seed, site, index), the outcome of a stabilization does
// not depend on the toppling order, and every run replays exactly.
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <vector>

#include "arw/graph.hpp"
#include "arw/rng.hpp"

namespace arw {

// Site state encoding: 0 empty, kSleeping a lone sleeping particle, k >= 1
// that many active particles.
using SiteState = int32_t;
inline constexpr SiteState kSleeping = -1;

inline constexpr bool is_unstable(SiteState s) { return s >= 1; }

// Rank of a state under the order empty < sleeping < 1 < 2 < ...
inline constexpr int64_t state_rank(SiteState s) {
    if (s == kSleeping) return 1;
    return s == 0 ? 0 : static_cast<int64_t>(s) + 1;
}

enum class InitKind { Bernoulli, ShiftedGeometric };

struct ModelParams {
    double mu = 0.5;      // particle density
    double lambda = 1.0;  // sleep rate
    InitKind init = InitKind::Bernoulli;

    double sleep_prob() const { return lambda / (1.0 + lambda); }
    // Mean particles per site.
    double density() const {
        return init == InitKind::Bernoulli ? mu : mu / (1.0 - mu);
    }
    // Probability that a site starts empty.
    double empty_prob() const { return 1.0 - mu; }
    void validate() const;
};

class ParticleConfig {
  public:
    explicit ParticleConfig(int32_t sites = 0) : state_(static_cast<size_t>(sites), 0) {}

    SiteState state(VertexId v) const { return state_[static_cast<size_t>(v)]; }
    int32_t site_count() const { return static_cast<int32_t>(state_.size()); }

    // Place a fresh active particle during initialization.
    void seed_active(VertexId v, int32_t count = 1) {
        state_[static_cast<size_t>(v)] += count;
        active_ += count;
    }
    void seed_sleeping(VertexId v) {
        state_[static_cast<size_t>(v)] = kSleeping;
        sleeping_ += 1;
    }

    // One active particle lands on v; wakes a sleeper (sleeping + 1 = 2).
    void arrive(VertexId v) {
        SiteState& s = state_[static_cast<size_t>(v)];
        if (s == kSleeping) {
            s = 2;
            sleeping_ -= 1;
            active_ += 2;
        } else {
            s += 1;
            active_ += 1;
        }
    }

    // One active particle leaves v (site must be unstable).
    void depart(VertexId v) {
        SiteState& s = state_[static_cast<size_t>(v)];
        s -= 1;
        active_ -= 1;
    }

    // A sleep instruction fired at v: a lone active particle falls asleep,
    // anything else is untouched.
    void apply_sleep(VertexId v) {
        SiteState& s = state_[static_cast<size_t>(v)];
        if (s == 1) {
            s = kSleeping;
            active_ -= 1;
            sleeping_ += 1;
        }
    }

    void absorb() { absorbed_ += 1; }

    int64_t active_particles() const { return active_; }
    int64_t sleeping_particles() const { return sleeping_; }
    int64_t absorbed_particles() const { return absorbed_; }
    // Conserved quantity: in-ball particles plus everything absorbed by the
    // exterior.
    int64_t total_mass() const { return active_ + sleeping_ + absorbed_; }

    bool stable_on(std::span<const VertexId> sites) const {
        for (VertexId v : sites)
            if (is_unstable(state(v))) return false;
        return true;
    }

    const std::vector<SiteState>& states() const { return state_; }
    bool operator==(const ParticleConfig& o) const { return state_ == o.state_; }

  private:
    std::vector<SiteState> state_;
    int64_t active_ = 0;
    int64_t sleeping_ = 0;
    int64_t absorbed_ = 0;
};

// I.i.d. initial configuration, all particles active.
ParticleConfig init_config(const Graph& g, const ModelParams& params, uint64_t seed);

enum class InstrKind : int8_t { Jump, Sleep, Neutral };

struct Instruction {
    InstrKind kind;
    int8_t slot;  // jump destination slot, meaningful for Jump only
};

using SleepMask = std::function<bool(VertexId, uint64_t)>;

// Deterministic array of instructions tau^{x,j}, sampled lazily and cached.
// Copies share the cache, so coupled procedures reading the same positions
// see identical values. An optional mask turns selected sleep instructions
// into neutral ones (enforced activation); masked and unmasked views of one
// tape stay bit-for-bit consistent everywhere else.
class InstructionTape {
  public:
    InstructionTape(uint64_t seed, double sleep_prob, int jump_slots);

    // j is 1-based, matching "the (h(x)+1)-th instruction".
    Instruction read(VertexId x, uint64_t j) const;

    // Raw value ignoring the mask (tests and audits).
    Instruction read_unmasked(VertexId x, uint64_t j) const;

    const SleepMask& mask() const { return mask_; }
    uint64_t seed() const { return seed_; }
    double sleep_prob() const { return sleep_prob_; }
    int jump_slots() const { return slots_; }

    // Test scripting: pin the first instructions at a site; reads past the
    // script fall back to the sampled stream.
    void preload(VertexId x, const std::vector<Instruction>& script);

    // Sites that have at least one sampled instruction, for audit dumps.
    int32_t cached_sites() const;
    uint64_t cached_depth(VertexId x) const;

  private:
    friend InstructionTape apply_sleep_mask(const InstructionTape& tape, SleepMask extra);

    struct Cache {
        std::vector<std::vector<int8_t>> per_site;  // -1 sleep, else slot
    };

    int8_t raw_code(VertexId x, uint64_t j) const;

    std::shared_ptr<Cache> cache_;
    uint64_t seed_ = 0;
    uint64_t key_ = 0;
    double sleep_prob_ = 0.5;
    int slots_ = 2;
    SleepMask mask_;  // empty = no mask
};

// View of the same tape in which sleep instructions are neutralized wherever
// the predicate holds. Masks compose by union.
InstructionTape apply_sleep_mask(const InstructionTape& tape, SleepMask extra);

inline SleepMask mask_everything() {
    return [](VertexId, uint64_t) { return true; };
}

struct Odometer {
    std::vector<uint64_t> used;

    explicit Odometer(int32_t sites = 0) : used(static_cast<size_t>(sites), 0) {}
    uint64_t at(VertexId v) const { return used[static_cast<size_t>(v)]; }
    void bump(VertexId v) { ++used[static_cast<size_t>(v)]; }
};

class StepBudgetExceeded : public std::runtime_error {
  public:
    explicit StepBudgetExceeded(uint64_t budget)
        : std::runtime_error("instruction step budget of " + std::to_string(budget) +
                             " exceeded; parameters are pathological for this scale"),
          budget(budget) {}
    uint64_t budget;
};

class IllegalToppleError : public std::logic_error {
  public:
    using std::logic_error::logic_error;
};

inline constexpr uint64_t kDefaultStepBudget = 1'000'000'000;

// Single-trial mutable context: one configuration, one odometer, one tape.
// Not shared across threads; concurrent trials each own one.
struct SimContext {
    const Graph* graph;
    ParticleConfig config;
    Odometer odometer;
    InstructionTape tape;
    uint64_t step_budget = kDefaultStepBudget;
    uint64_t steps_used = 0;
};

SimContext make_context(const Graph& g, const ModelParams& params, uint64_t seed,
                        uint64_t step_budget = kDefaultStepBudget);

enum class ToppleEffect {
    Jumped,          // particle moved to a neighbor
    JumpedAbsorbed,  // particle moved into the exterior and was deleted
    Slept,           // lone particle fell asleep
    SleptNoop,       // sleep instruction on a crowded site, no effect
    Neutral,         // masked instruction, no effect
    Illegal,         // site was stable and enforcement was off: no-op, h unchanged
};

struct ToppleOutcome {
    ToppleEffect effect;
    VertexId target = kExterior;  // jump destination when effect is Jumped
};

// Consume the next instruction at x. Legal only when x is unstable; with
// enforce_legal an illegal call throws (it signals a bug in the caller),
// without it the call is a no-op that leaves the odometer untouched.
ToppleOutcome topple(SimContext& ctx, VertexId x, bool enforce_legal = true);

}  // namespace arw
