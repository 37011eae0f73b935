#include "arw/core.hpp"

#include <cmath>

namespace arw {

void ModelParams::validate() const {
    if (!(mu >= 0.0 && mu <= 1.0)) throw std::invalid_argument("mu must lie in [0, 1]");
    if (init == InitKind::ShiftedGeometric && mu >= 1.0)
        throw std::invalid_argument("shifted-geometric initial condition needs mu < 1");
    if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be > 0");
}

ParticleConfig init_config(const Graph& g, const ModelParams& params, uint64_t seed) {
    params.validate();
    ParticleConfig cfg(g.vertex_count());
    const uint64_t key = rng::hash2(seed, rng::kInitStream);
    for (VertexId v = 0; v < g.vertex_count(); ++v) {
        const double u = rng::to_unit(rng::hash2(key, static_cast<uint64_t>(v)));
        if (params.init == InitKind::Bernoulli) {
            if (u < params.mu) cfg.seed_active(v);
        } else {
            // P(count = i) = mu^i (1 - mu): invert the CDF with one draw.
            if (u >= 1.0 - params.mu && params.mu > 0.0) {
                const int32_t count = static_cast<int32_t>(
                    std::ceil(std::log1p(-u) / std::log(params.mu)) - 1);
                if (count > 0) cfg.seed_active(v, count);
            }
        }
    }
    return cfg;
}

InstructionTape::InstructionTape(uint64_t seed, double sleep_prob, int jump_slots)
    : cache_(std::make_shared<Cache>()),
      seed_(seed),
      key_(rng::hash2(seed, rng::kTapeStream)),
      sleep_prob_(sleep_prob),
      slots_(jump_slots) {
    if (!(sleep_prob >= 0.0 && sleep_prob < 1.0))
        throw std::invalid_argument("sleep probability must lie in [0, 1)");
    if (jump_slots < 1) throw std::invalid_argument("tape needs at least one jump slot");
}

int8_t InstructionTape::raw_code(VertexId x, uint64_t j) const {
    auto& sites = cache_->per_site;
    if (static_cast<size_t>(x) >= sites.size()) sites.resize(static_cast<size_t>(x) + 1);
    auto& column = sites[static_cast<size_t>(x)];
    while (column.size() < j) {
        const uint64_t index = column.size() + 1;
        const double u = rng::to_unit(rng::hash3(key_, static_cast<uint64_t>(x), index));
        int8_t code;
        if (u < sleep_prob_) {
            code = -1;
        } else {
            const double v = (u - sleep_prob_) / (1.0 - sleep_prob_);
            int slot = static_cast<int>(v * slots_);
            if (slot >= slots_) slot = slots_ - 1;
            code = static_cast<int8_t>(slot);
        }
        column.push_back(code);
    }
    return column[j - 1];
}

Instruction InstructionTape::read(VertexId x, uint64_t j) const {
    const int8_t code = raw_code(x, j);
    if (code < 0) {
        if (mask_ && mask_(x, j)) return Instruction{InstrKind::Neutral, 0};
        return Instruction{InstrKind::Sleep, 0};
    }
    return Instruction{InstrKind::Jump, code};
}

Instruction InstructionTape::read_unmasked(VertexId x, uint64_t j) const {
    const int8_t code = raw_code(x, j);
    if (code < 0) return Instruction{InstrKind::Sleep, 0};
    return Instruction{InstrKind::Jump, code};
}

void InstructionTape::preload(VertexId x, const std::vector<Instruction>& script) {
    auto& sites = cache_->per_site;
    if (static_cast<size_t>(x) >= sites.size()) sites.resize(static_cast<size_t>(x) + 1);
    auto& column = sites[static_cast<size_t>(x)];
    column.clear();
    for (const Instruction& ins : script) {
        if (ins.kind == InstrKind::Neutral)
            throw std::invalid_argument("neutral instructions only arise from masking");
        column.push_back(ins.kind == InstrKind::Sleep ? int8_t{-1} : ins.slot);
    }
}

int32_t InstructionTape::cached_sites() const {
    return static_cast<int32_t>(cache_->per_site.size());
}

uint64_t InstructionTape::cached_depth(VertexId x) const {
    if (static_cast<size_t>(x) >= cache_->per_site.size()) return 0;
    return cache_->per_site[static_cast<size_t>(x)].size();
}

InstructionTape apply_sleep_mask(const InstructionTape& tape, SleepMask extra) {
    InstructionTape view = tape;  // shares the cache
    if (!tape.mask_) {
        view.mask_ = std::move(extra);
    } else {
        SleepMask previous = tape.mask_;
        view.mask_ = [previous, extra = std::move(extra)](VertexId x, uint64_t j) {
            return previous(x, j) || extra(x, j);
        };
    }
    return view;
}

SimContext make_context(const Graph& g, const ModelParams& params, uint64_t seed,
                        uint64_t step_budget) {
    params.validate();
    return SimContext{
        &g,
        init_config(g, params, seed),
        Odometer(g.vertex_count()),
        InstructionTape(seed, params.sleep_prob(), g.jump_slots()),
        step_budget,
        0,
    };
}

ToppleOutcome topple(SimContext& ctx, VertexId x, bool enforce_legal) {
    const SiteState s = ctx.config.state(x);
    if (!is_unstable(s)) {
        if (enforce_legal)
            throw IllegalToppleError("topple of stable site " + ctx.graph->label(x));
        return {ToppleEffect::Illegal, kExterior};
    }
    if (++ctx.steps_used > ctx.step_budget) throw StepBudgetExceeded(ctx.step_budget);

    const Instruction ins = ctx.tape.read(x, ctx.odometer.at(x) + 1);
    ctx.odometer.bump(x);
    switch (ins.kind) {
        case InstrKind::Jump: {
            const VertexId target = ctx.graph->jump_target(x, ins.slot);
            ctx.config.depart(x);
            if (target == kExterior) {
                ctx.config.absorb();
                return {ToppleEffect::JumpedAbsorbed, kExterior};
            }
            ctx.config.arrive(target);
            return {ToppleEffect::Jumped, target};
        }
        case InstrKind::Sleep:
            if (s == 1) {
                ctx.config.apply_sleep(x);
                return {ToppleEffect::Slept, kExterior};
            }
            return {ToppleEffect::SleptNoop, kExterior};
        case InstrKind::Neutral:
            return {ToppleEffect::Neutral, kExterior};
    }
    return {ToppleEffect::Illegal, kExterior};  // unreachable
}

}  // namespace arw
