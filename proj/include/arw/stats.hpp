#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>

namespace arw {

// A Monte Carlo point estimate with its standard error.
struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
    int64_t trials = 0;
};

inline Estimate mean_estimate(std::span<const double> xs) {
    Estimate e;
    e.trials = static_cast<int64_t>(xs.size());
    if (xs.empty()) return e;
    double sum = 0.0, comp = 0.0;
    for (double x : xs) {  // Kahan-compensated; order is fixed by the caller
        const double y = x - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    e.value = sum / static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - e.value) * (x - e.value);
        e.std_error = std::sqrt(ss / (static_cast<double>(xs.size() - 1) * static_cast<double>(xs.size())));
    }
    return e;
}

inline Estimate fraction_estimate(int64_t hits, int64_t n) {
    Estimate e;
    e.trials = n;
    if (n <= 0) return e;
    const double p = static_cast<double>(hits) / static_cast<double>(n);
    e.value = p;
    if (n > 1) e.std_error = std::sqrt(p * (1.0 - p) / static_cast<double>(n - 1));
    return e;
}

enum class Verdict { Satisfied, Inconclusive, Violated };

inline const char* verdict_name(Verdict v) {
    switch (v) {
        case Verdict::Satisfied: return "satisfied";
        case Verdict::Inconclusive: return "inconclusive";
        case Verdict::Violated: return "violated";
    }
    return "?";
}

// Comparison of a Monte Carlo estimate against a bound. A bound only counts
// as violated when the estimate breaks it by more than three combined
// standard errors; anything closer is inconclusive.
struct BoundCheck {
    std::string name;
    double bound = 0.0;
    double estimate = 0.0;
    double sigma = 0.0;        // combined std error of (estimate - bound)
    double slack_sigma = 0.0;  // signed margin in sigma units, >= 0 means satisfied
    Verdict verdict = Verdict::Satisfied;
};

namespace detail {
inline BoundCheck make_check(std::string name, double margin, double sigma, double bound,
                             double estimate) {
    BoundCheck c;
    c.name = std::move(name);
    c.bound = bound;
    c.estimate = estimate;
    c.sigma = sigma;
    c.slack_sigma = (sigma > 0.0) ? margin / sigma
                                  : (margin >= 0.0 ? std::numeric_limits<double>::infinity()
                                                   : -std::numeric_limits<double>::infinity());
    if (margin >= 0.0)
        c.verdict = Verdict::Satisfied;
    else if (sigma > 0.0 && margin >= -3.0 * sigma)
        c.verdict = Verdict::Inconclusive;
    else
        c.verdict = Verdict::Violated;
    return c;
}
}  // namespace detail

// Check "estimate <= bound".
inline BoundCheck check_upper(std::string name, const Estimate& est, double bound,
                              double bound_std_error = 0.0) {
    const double sigma = std::hypot(est.std_error, bound_std_error);
    return detail::make_check(std::move(name), bound - est.value, sigma, bound, est.value);
}

// Check "estimate >= bound".
inline BoundCheck check_lower(std::string name, const Estimate& est, double bound,
                              double bound_std_error = 0.0) {
    const double sigma = std::hypot(est.std_error, bound_std_error);
    return detail::make_check(std::move(name), est.value - bound, sigma, bound, est.value);
}

}  // namespace arw
