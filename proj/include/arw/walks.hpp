// Random-walk statistics on a truncated graph: expected visits to the origin
// (Green value), non-return probability, speed at exit, and hitting
// probabilities. Walks follow the graph's jump distribution and are killed
// when they step outside the ball.
#pragma once

#include <cstdint>

#include "arw/graph.hpp"
#include "arw/stats.hpp"

namespace arw {

struct RwStats {
    Estimate green_visits;    // expected visits to the origin, start included
    Estimate nonreturn;       // probability of never revisiting the origin
    // Mean outward drift per step taken from distance >= 1 (ratio of sums
    // across trials). Unbiased for the walk speed on trees and the asymmetric
    // line at any radius; zero on recurrent lattices.
    Estimate speed;
    int64_t trials = 0;
    uint64_t seed = 0;
    int64_t horizon_capped = 0;  // walks that hit the step horizon
};

RwStats estimate_rw_stats(const Graph& g, int64_t trials, int64_t horizon, uint64_t seed,
                          int parallel = 1);

// Monte Carlo probability that a walk from `source` visits `target` before
// stepping outside the ball.
Estimate hitting_prob(const Graph& g, VertexId source, VertexId target, int64_t trials,
                      uint64_t seed, int parallel = 1);

// Closed form for regular trees: probability that a walk started at distance
// ell from the origin ever reaches it, (1/(d-1))^ell.
double tree_hitting_exact(const Graph& g, int ell);

// Exact Green value of the infinite d-regular tree, (d-1)/(d-2).
double tree_green_exact(int degree);

}  // namespace arw
