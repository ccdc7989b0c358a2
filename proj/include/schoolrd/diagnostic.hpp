#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "schoolrd/eligibility.hpp"
#include "schoolrd/error.hpp"
#include "schoolrd/linalg.hpp"
#include "schoolrd/market.hpp"

namespace schoolrd {

struct RdFlags {
    bool possibly = false;   // within a band where some crossing changes treatment status
    bool definitely = false; // and no lottery contrast across the boundary covers the score
    // Witnessing (preferred, other) test-school pairs for the possibly flag.
    std::vector<std::pair<int, int>> witnesses;
};

// Flags whether a student is possibly / definitely subjected to RD variation
// for the treated set, at the sample cutoffs and the estimator's bandwidth.
//
// The band on the running test is the full [cutoff - h, cutoff + h] (scores
// just above the cutoff are subjected too); the remaining coordinates must
// lie in the closure of the less-preferred school's eligibility set. The
// lottery-pair exclusion enlarges the covering intersection by h per
// coordinate, treating every within-h score as straddling.
inline RdFlags rd_flags(const MarketSpec& market, const StudentProfile& student,
                        const std::vector<int>& treated, const CutoffVector& cutoffs,
                        double h) {
    if (!(h > 0.0)) throw ConfigError("rd_flags: bandwidth must be positive");
    cutoffs.validate(market);
    std::vector<char> is_treated(static_cast<std::size_t>(market.num_schools()), 0);
    for (int s : treated) is_treated.at(static_cast<std::size_t>(s)) = 1;
    const TypeView type = type_view(student);

    RdFlags flags;
    bool lottery_covered = false;
    const auto& prefs = student.preferences;
    for (std::size_t a = 0; a < prefs.size(); ++a) {
        for (std::size_t b = a + 1; b < prefs.size(); ++b) {
            const int s1 = prefs[a], s0 = prefs[b];
            if (is_treated[static_cast<std::size_t>(s1)] == is_treated[static_cast<std::size_t>(s0)])
                continue;  // need exactly one side treated
            const ContrastReport rep = identified_contrast_region(market, type, cutoffs, s1, s0);
            if (rep.variation == Variation::RdDriven) {
                const auto [t1, cut] = *rep.rd_cutoff;
                Region zone = eligibility_set(market, type, cutoffs, s0).closure();
                zone.per_test[static_cast<std::size_t>(t1 - 1)] =
                    Interval::closed(std::max(0.0, cut - h), std::min(1.0, cut + h));
                if (zone.contains(student.scores)) {
                    flags.possibly = true;
                    flags.witnesses.emplace_back(s1, s0);
                }
            } else if (rep.variation == Variation::LotteryDriven) {
                Region zone(market.num_tests);
                for (int t = 1; t <= market.num_tests; ++t)
                    zone.per_test[static_cast<std::size_t>(t - 1)] =
                        rep.region.per_test[static_cast<std::size_t>(t - 1)].enlarged(h);
                if (zone.contains(student.scores)) lottery_covered = true;
            }
        }
    }
    flags.definitely = flags.possibly && !lottery_covered;
    return flags;
}

// Per-observation weights of a least-squares coefficient: w' = e_j'(X'X)^-1 X',
// so that sum_i w_i y_i is the coefficient estimate for any outcome vector.
inline std::vector<double> linear_estimator_weights(const Matrix& design,
                                                    std::size_t coefficient) {
    const std::size_t n = design.rows, k = design.cols;
    if (coefficient >= k) throw ConfigError("linear_estimator_weights: coefficient index out of range");
    Matrix xtx(k, k);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t p = 0; p < k; ++p)
            for (std::size_t q = 0; q <= p; ++q) xtx(p, q) += design(i, p) * design(i, q);
    for (std::size_t p = 0; p < k; ++p)
        for (std::size_t q = p + 1; q < k; ++q) xtx(p, q) = xtx(q, p);
    std::vector<double> e(k, 0.0);
    e[coefficient] = 1.0;
    const std::vector<double> v = solve_linear(std::move(xtx), std::move(e));
    std::vector<double> w(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t p = 0; p < k; ++p) acc += v[p] * design(i, p);
        w[i] = acc;
    }
    return w;
}

struct WeightBounds {
    double upper = 0.0;  // weight on possibly-subjected observations
    double lower = 0.0;  // weight on definitely-subjected observations
    std::size_t n_possibly = 0, n_definitely = 0;
    std::size_t wrong_signed = 0;  // negative weight on treated or positive on control
};

// Bounds on the weight a linear estimator puts on RD variation:
// sum_i w_i (2 D_i - 1) flag_i. Equals the change in the estimate when every
// treated flagged outcome moves up by one and every control flagged outcome
// moves down by one. The bounds can invert or go negative when weights are
// wrong-signed; that is reported, not forbidden.
inline WeightBounds rd_weight_bounds(const std::vector<double>& weights,
                                     const std::vector<char>& treated,
                                     const std::vector<RdFlags>& flags) {
    if (weights.size() != treated.size() || weights.size() != flags.size())
        throw ConfigError("rd_weight_bounds: input lengths differ");
    WeightBounds out;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const double sign = treated[i] ? 1.0 : -1.0;
        if (weights[i] != 0.0 && weights[i] * sign < 0.0) out.wrong_signed += 1;
        if (flags[i].possibly) {
            out.upper += weights[i] * sign;
            out.n_possibly += 1;
        }
        if (flags[i].definitely) {
            out.lower += weights[i] * sign;
            out.n_definitely += 1;
        }
    }
    return out;
}

}  // namespace schoolrd
