#pragma once

#include <vector>

#include "schoolrd/dgp.hpp"
#include "schoolrd/eligibility.hpp"
#include "schoolrd/market.hpp"

// Bundled worked example: four schools (an undersubscribed lottery outside
// option, two test-score schools sharing one test, one oversubscribed lottery
// school) and three preference types. Capacities are calibrated so the
// market-clearing cutoffs are exactly (0, 1/3, 2/3, 1/2); the score density
// (1 + 4 sin^2(3 pi r)) / 3 puts mass exactly 1/3 on each third of [0,1] and
// thins out near the cutoffs.

namespace schoolrd::demo {

inline MarketSpec market() {
    MarketSpec m;
    m.num_tests = 1;
    m.num_lotteries = 2;
    m.schools = {
        {0, kInfiniteCapacity, SchoolKind::Lottery, 1, 0},
        {1, 2.0 / 9.0, SchoolKind::TestScore, 1, 0},
        {2, 5.0 / 18.0, SchoolKind::TestScore, 1, 0},
        {3, 1.0 / 3.0, SchoolKind::Lottery, 2, 0},
    };
    return m;
}

inline CutoffVector cutoffs() {
    return CutoffVector{{0.0, 1.0 / 3.0, 2.0 / 3.0, 0.5}};
}

// The census of the three preference types (A, B, C), in table order.
inline std::vector<StudentProfile> census() {
    std::vector<StudentProfile> out(3);
    out[0].preferences = {2, 3, 1, 0};
    out[1].preferences = {2, 1, 3, 0};
    out[2].preferences = {3, 2, 1, 0};
    for (auto& st : out) {
        st.qualifiers = {0, 0, 0, 0};
        st.scores = {0.0};
        st.lottery_draws = {0.0, 0.0};
    }
    return out;
}

inline const char* type_label(std::size_t k) {
    static const char* names[] = {"A", "B", "C"};
    return names[k];
}

inline ScoreDensity score_density() { return ScoreDensity::sin_squared(4.0, 3); }

namespace detail {

inline StudentType base_type(const char* label, std::vector<int> prefs) {
    StudentType ty;
    ty.label = label;
    ty.share = 1.0 / 3.0;
    ty.preferences = std::move(prefs);
    ty.qualifiers = {0, 0, 0, 0};
    ty.score_density = {score_density()};
    ty.outcome_mean.resize(4);
    ty.noise = NoiseLaw::gaussian(0.3);
    return ty;
}

}  // namespace detail

// DGP without outcome structure (cutoff-convergence experiments).
inline DgpSpec dgp() {
    DgpSpec d;
    d.market = market();
    d.types = {detail::base_type("A", {2, 3, 1, 0}), detail::base_type("B", {2, 1, 3, 0}),
               detail::base_type("C", {3, 2, 1, 0})};
    d.known_cutoffs = cutoffs();
    return d;
}

// Treated condition used throughout the worked example: the high-cutoff test
// school and the oversubscribed lottery school.
inline std::vector<int> treated_set() { return {2, 3}; }

// DGP with cubic outcome means. Schools in the same condition share a mean;
// the treated-minus-control gap is exactly `effect` at every score, so the
// boundary contrast at any cutoff equals `effect` for every type.
inline DgpSpec outcome_dgp(double effect) {
    DgpSpec d = dgp();
    const double a1 = 0.4, a2 = -0.3, a3 = 0.15;  // shared curvature, mild
    for (std::size_t k = 0; k < d.types.size(); ++k) {
        auto& ty = d.types[k];
        const double level = 0.2 + 0.1 * static_cast<double>(k);
        OutcomeMean control{level, {{{a1, a2, a3}}}};
        OutcomeMean treat{level + effect, {{{a1, a2, a3}}}};
        ty.outcome_mean[0] = control;
        ty.outcome_mean[1] = control;
        ty.outcome_mean[2] = treat;
        ty.outcome_mean[3] = treat;
    }
    return d;
}

// Variant with per-type heterogeneous slopes; the contrast at the pair
// (2 over 1) cutoff still equals `effect` for every type by construction.
inline DgpSpec heterogeneous_outcome_dgp(double effect) {
    DgpSpec d = dgp();
    const double rho = 2.0 / 3.0;
    for (std::size_t k = 0; k < d.types.size(); ++k) {
        auto& ty = d.types[k];
        const double level = 0.3 + 0.2 * static_cast<double>(k);
        const double slope_c = 0.2 + 0.3 * static_cast<double>(k);
        const double slope_t = 0.8 - 0.25 * static_cast<double>(k);
        OutcomeMean control{level, {{{slope_c, 0.1, -0.05}}}};
        // Match the treated intercept so the gap at rho is exactly `effect`.
        const double t0 = level + effect + (slope_c - slope_t) * rho + 0.0;
        OutcomeMean treat{t0, {{{slope_t, 0.1, -0.05}}}};
        ty.outcome_mean[0] = control;
        ty.outcome_mean[1] = control;
        ty.outcome_mean[2] = treat;
        ty.outcome_mean[3] = treat;
    }
    return d;
}

}  // namespace schoolrd::demo
