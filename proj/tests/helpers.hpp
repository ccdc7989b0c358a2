#pragma once

#include <algorithm>
#include <numeric>
#include <vector>

#include "schoolrd/dgp.hpp"
#include "schoolrd/market.hpp"
#include "schoolrd/rng.hpp"

// Shared generators for the property-style suites: small random markets with
// mixed school kinds and qualifier levels, plus random rosters and consistent
// random cutoff vectors.

namespace testutil {

using namespace schoolrd;

struct RandomMarketOptions {
    int max_schools = 5;  // inside schools, excluding the outside option
    int max_tests = 2;
    int max_lotteries = 2;
    int max_qualifier = 2;
    bool lottery_only = false;
    bool test_only = false;
};

inline MarketSpec random_market(Rng& rng, const RandomMarketOptions& opt = {}) {
    MarketSpec m;
    const int inside = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(opt.max_schools)));
    m.num_tests = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(opt.max_tests)));
    m.num_lotteries = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(opt.max_lotteries)));
    m.schools.push_back({0, kInfiniteCapacity, SchoolKind::Lottery, 1, 0});
    for (int s = 1; s <= inside; ++s) {
        SchoolSpec sp;
        sp.id = s;
        sp.capacity_share = 0.05 + 0.4 * rng.uniform01();
        const bool lottery = opt.lottery_only || (!opt.test_only && rng.uniform01() < 0.5);
        sp.kind = lottery ? SchoolKind::Lottery : SchoolKind::TestScore;
        sp.index = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(lottery ? m.num_lotteries : m.num_tests)));
        sp.qualifier_max = static_cast<int>(rng.index(static_cast<std::size_t>(opt.max_qualifier + 1)));
        m.schools.push_back(sp);
    }
    return m;
}

// Random strict partial preference list over the inside schools, ending at 0.
inline std::vector<int> random_preferences(Rng& rng, const MarketSpec& m) {
    std::vector<int> ids;
    for (int s = 1; s < m.num_schools(); ++s) ids.push_back(s);
    for (std::size_t k = ids.size(); k > 1; --k) std::swap(ids[k - 1], ids[rng.index(k)]);
    const std::size_t keep = 1 + rng.index(ids.size());
    ids.resize(keep);
    ids.push_back(0);
    return ids;
}

inline StudentProfile random_student(Rng& rng, const MarketSpec& m) {
    StudentProfile st;
    st.preferences = random_preferences(rng, m);
    st.scores.resize(static_cast<std::size_t>(m.num_tests));
    for (auto& r : st.scores) r = rng.uniform01();
    st.lottery_draws.resize(static_cast<std::size_t>(m.num_lotteries));
    for (auto& u : st.lottery_draws) u = rng.uniform01();
    st.qualifiers.resize(static_cast<std::size_t>(m.num_schools()));
    for (int s = 0; s < m.num_schools(); ++s)
        st.qualifiers[static_cast<std::size_t>(s)] =
            static_cast<int>(rng.index(static_cast<std::size_t>(m.school(s).qualifier_max + 1)));
    return st;
}

inline std::vector<StudentProfile> random_roster(Rng& rng, const MarketSpec& m, std::size_t n) {
    std::vector<StudentProfile> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(random_student(rng, m));
    return out;
}

// Random cutoff vector avoiding the qualifier grid and extreme values; kept
// away from multiples of 1/200 so grid scans never land on a boundary.
inline CutoffVector random_cutoffs(Rng& rng, const MarketSpec& m) {
    CutoffVector c;
    c.values.assign(static_cast<std::size_t>(m.num_schools()), 0.0);
    for (int s = 1; s < m.num_schools(); ++s) {
        if (rng.uniform01() < 0.25) continue;  // leave some schools undersubscribed
        const double grid = (1.0 + static_cast<double>(rng.index(14))) / 16.0;
        c.values[static_cast<std::size_t>(s)] = grid + 0.0037;
    }
    return c;
}

inline double mean_of(const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double sd_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace testutil
