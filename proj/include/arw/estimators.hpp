// Monte Carlo estimators and bound checkers built on the stabilization
// procedures. Every estimator is a pure function of its inputs and the seed;
// trials are independent and may run on any number of threads without
// changing the result.
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "arw/graph.hpp"
#include "arw/stabilize.hpp"
#include "arw/stats.hpp"
#include "arw/walks.hpp"

namespace arw {

struct QBoundsResult {
    Estimate q;            // P(x ends with a sleeping particle)
    Estimate toppled;      // P(x toppled at least once)
    BoundCheck lower;      // q >= sleep_prob * toppled
    std::optional<BoundCheck> upper;  // q <= 3 sqrt(lambda (C (1+lambda) + 1))
    double green_value = 0.0;
    int64_t trials = 0;
    uint64_t seed = 0;
};

// Stabilize K per trial and record whether x ends sleeping and whether it was
// toppled. The upper bound needs the Green value of the infinite family and
// is only meaningful on transient families; pass check_upper=false to skip it
// (mandatory on recurrent families).
QBoundsResult estimate_q_and_check_bounds(const Graph& g, VertexId x,
                                          std::span<const VertexId> K, const ModelParams& params,
                                          int64_t trials, uint64_t seed, bool check_upper,
                                          double green_value = 0.0, double green_std_error = 0.0,
                                          int parallel = 1,
                                          uint64_t step_budget = kDefaultStepBudget);

struct ActivityResult {
    Estimate probability;  // P(origin toppled >= theta times)
    Estimate mean_origin_topplings;
    int64_t theta = 1;
    int64_t trials = 0;
    uint64_t seed = 0;
};

// Fraction of independent ball stabilizations that topple the origin at least
// theta times. mask_all_sleeps runs the no-sleep variant (pure erosion).
ActivityResult estimate_activity(const Graph& g, const ModelParams& params, int64_t theta,
                                 int64_t trials, uint64_t seed, int parallel = 1,
                                 uint64_t step_budget = kDefaultStepBudget,
                                 bool mask_all_sleeps = false);

struct BisectionSettings {
    double lo = 0.05;
    double hi = 0.95;
    double tol = 0.05;
    int64_t trials_per_point = 200;
    int64_t theta = 1;
    double cutoff = 0.5;  // classify active when P(m >= theta) > cutoff
};

class NoSignChange : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct MuCResult {
    double lo = 0.0;
    double hi = 0.0;
    std::vector<std::pair<double, double>> evaluations;  // (mu, activity estimate)
    BisectionSettings settings;
    uint64_t seed = 0;
};

// Bisection for the critical density at a fixed scale: "active at scale L"
// means the estimated P(origin toppled >= theta) exceeds the cutoff. This is
// a finite-size proxy for the infinite-volume critical density.
MuCResult estimate_mu_c(const Graph& g, double lambda, const BisectionSettings& settings,
                        uint64_t seed, int parallel = 1,
                        uint64_t step_budget = kDefaultStepBudget);

struct SuffCondEstimate {
    Estimate m_total;        // E[M_L], visits to all spheres
    Estimate m_surviving;    // E[M~_L], visits before the kill clock fires
    Estimate ratio;          // E[M~_L] / E[M_L] (delta-method error)
    double threshold = 0.0;  // nu_0 / (density + nu_0)
    std::vector<Estimate> per_level;            // E[N_n^L]
    std::vector<Estimate> per_level_surviving;  // E[N~_n^L]
    BoundCheck condition;    // ratio > threshold
    int64_t trials = 0;
    uint64_t seed = 0;
};

// Killed-walk statistics behind the sufficient condition for activity: a walk
// from the origin is followed until it leaves the ball or returns; visits to
// each sphere are counted, once plainly and once only until an independent
// clock kills the walk outside the sphere's interior.
SuffCondEstimate estimate_sufficient_condition(const Graph& g, const ModelParams& params,
                                               int64_t trials, uint64_t seed, int parallel = 1);

// One-step expected multiplier of Psi_t = sum_i gamma^{k_i} in the token
// process, gamma = sqrt(1 - beta). The process is a supermartingale (and the
// packing survives with positive probability) when this is below one.
double drift_factor(int fanout, double advance_prob, double beta);

struct BranchingParams {
    int fanout = 3;            // tokens spawned per unit of branch depth
    double advance_prob = 0.99;
    double beta = 0.75;        // geometric success probability of the branch depth
    int64_t max_steps = 100;
    int64_t token_budget = 10'000'000;
    bool validate_psi = false;  // cross-check incremental Psi every step
};

struct BranchingReport {
    Estimate survival;       // no token at nonpositive position within max_steps
    int64_t censored = 0;    // trials that hit the token budget (counted as dead)
    int64_t died = 0;
    int64_t min_position = 1;
    Estimate psi_ratio;      // empirical one-step Psi multiplier
    int64_t psi_samples = 0;
    std::vector<double> psi_trajectory;  // of the first trial
    Estimate all_advance_prefix;  // fraction of trials whose first prefix_steps
                                  // saw every token advance
    int64_t prefix_steps = 0;
    int64_t trials = 0;
    uint64_t seed = 0;
};

// Token process: fanout tokens start at position 1; each step every token
// independently advances by one with advance_prob, otherwise it is replaced
// by ell*fanout tokens ell positions back, ell geometric(beta). A trial
// survives when no token ever reaches a nonpositive position.
BranchingReport simulate_branching(const BranchingParams& params, int64_t trials, uint64_t seed,
                                   int parallel = 1, int64_t prefix_steps = 0);

// Branch-process parameters matched to the tree packing procedure.
double pack_matched_advance_prob(int degree, double mu);
inline double pack_matched_beta(double lambda) { return lambda / (1.0 + lambda); }

}  // namespace arw
