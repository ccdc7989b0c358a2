#pragma once

#include <algorithm>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "schoolrd/error.hpp"
#include "schoolrd/market.hpp"
#include "schoolrd/region.hpp"

namespace schoolrd {

struct CutoffVector {
    std::vector<double> values;  // per school id; values[0] == 0

    double at(int school) const { return values.at(static_cast<std::size_t>(school)); }
    int size() const { return static_cast<int>(values.size()); }

    void validate(const MarketSpec& market) const {
        if (size() != market.num_schools()) throw ConfigError("cutoff vector length != number of schools");
        for (double c : values)
            if (!(c >= 0.0 && c <= 1.0)) throw ConfigError("cutoff outside [0,1]");
        if (!values.empty() && values[0] != 0.0) throw ConfigError("outside-option cutoff must be 0");
    }
};

// A view of the assignment-relevant type: preference list + qualifiers.
struct TypeView {
    std::span<const int> preferences;
    std::span<const int> qualifiers;  // indexed by school id

    int qualifier_at(int school) const { return qualifiers[static_cast<std::size_t>(school)]; }
    bool lists(int school) const {
        return std::find(preferences.begin(), preferences.end(), school) != preferences.end();
    }
    bool prefers(int a, int b) const {  // a listed strictly ahead of b
        for (int s : preferences) {
            if (s == a) return true;
            if (s == b) return false;
        }
        return false;
    }
    // Schools strictly preferred to `school` (earlier on the list).
    std::vector<int> preferred_to(int school) const {
        std::vector<int> out;
        for (int s : preferences) {
            if (s == school) return out;
            out.push_back(s);
        }
        throw ConfigError("school " + std::to_string(school) + " not on the preference list");
    }
};

inline TypeView type_view(const StudentProfile& st) {
    return TypeView{st.preferences, st.qualifiers};
}

// Minimum tie-breaker value that clears cutoff c at qualifier level q:
// [((1+qbar)c - q) v 0] ^ 1. Valid for both school kinds; for lottery schools
// 1 minus this value is the per-draw win probability.
inline double clear_threshold(const SchoolSpec& school, int q, double cutoff) {
    if (q < 0 || q > school.qualifier_max) throw ConfigError("qualifier outside {0..qbar} for school " + std::to_string(school.id));
    const double raw = (1.0 + static_cast<double>(school.qualifier_max)) * cutoff - static_cast<double>(q);
    return std::min(1.0, std::max(0.0, raw));
}

// Cutoff translated into test-score space for a given qualifier level.
inline double score_cutoff(const SchoolSpec& school, int q, double cutoff) {
    if (!school.is_test()) throw ConfigError("score_cutoff: school " + std::to_string(school.id) + " is not a test-score school");
    return clear_threshold(school, q, cutoff);
}

// Per-draw win probability at a lottery school for qualifier level q.
inline double lottery_win_probability(const SchoolSpec& school, int q, double cutoff) {
    if (!school.is_lottery()) throw ConfigError("lottery_win_probability: school " + std::to_string(school.id) + " is not a lottery school");
    return 1.0 - clear_threshold(school, q, cutoff);
}

// The school-level test-score cutoff: the largest qualifier-level cutoff below
// 1. At most one level is interior when cutoffs avoid the qualifier grid; the
// rest are 0 or 1.
inline double school_test_cutoff(const SchoolSpec& school, const CutoffVector& c) {
    if (!school.is_test()) throw ConfigError("school_test_cutoff: school " + std::to_string(school.id) + " is not a test-score school");
    double best = 0.0;
    for (int q = 0; q <= school.qualifier_max; ++q) {
        const double r = clear_threshold(school, q, c.at(school.id));
        if (r < 1.0) best = std::max(best, r);
    }
    return best;
}

// Most lenient test-space cutoff on test t among schools preferred to
// `school`. When no preferred school uses test t the constraint is vacuous:
// the value is 1 and the induced interval is closed at 1 (vacuous == true).
struct LenientCutoff {
    double value = 1.0;
    bool vacuous = true;
};

inline LenientCutoff lenient_cutoff(const MarketSpec& market, const TypeView& type,
                                    const CutoffVector& c, int school, int test) {
    LenientCutoff out;
    for (int s1 : type.preferred_to(school)) {
        const SchoolSpec& sp = market.school(s1);
        if (!sp.is_test() || sp.index != test) continue;
        const double r = clear_threshold(sp, type.qualifier_at(s1), c.at(s1));
        if (out.vacuous || r < out.value) out.value = r;
        out.vacuous = false;
    }
    return out;
}

// L(q,c): lottery schools the type wins with probability one.
inline std::vector<int> sure_win_set(const MarketSpec& market, const TypeView& type,
                                     const CutoffVector& c) {
    std::vector<int> out;
    for (const auto& sp : market.schools) {
        if (!sp.is_lottery()) continue;
        if (clear_threshold(sp, type.qualifier_at(sp.id), c.at(sp.id)) == 0.0) out.push_back(sp.id);
    }
    return out;
}

// Per-lottery feasibility of the event "win at s, lose at every lottery school
// preferred to s". Constraints on a shared draw are intervals; the event has
// positive probability iff every lottery's constraint interval has positive
// length. Exact under independent uniform lotteries.
inline bool favorite_lottery_positive(const MarketSpec& market, const TypeView& type,
                                      const CutoffVector& c, int school) {
    const SchoolSpec& target = market.school(school);
    if (!target.is_lottery()) throw ConfigError("favorite_lottery_positive: school " + std::to_string(school) + " is not a lottery school");
    // Constraint per lottery index: the draw must lie in [win_lo, lose_hi).
    std::vector<double> lo(static_cast<std::size_t>(market.num_lotteries), 0.0);
    std::vector<double> hi(static_cast<std::size_t>(market.num_lotteries), 1.0);
    const std::size_t own = static_cast<std::size_t>(target.index - 1);
    lo[own] = clear_threshold(target, type.qualifier_at(school), c.at(school));
    for (int s1 : type.preferred_to(school)) {
        const SchoolSpec& sp = market.school(s1);
        if (!sp.is_lottery()) continue;
        const std::size_t l = static_cast<std::size_t>(sp.index - 1);
        hi[l] = std::min(hi[l], clear_threshold(sp, type.qualifier_at(s1), c.at(s1)));
    }
    for (std::size_t l = 0; l < lo.size(); ++l)
        if (!(lo[l] < hi[l])) return false;
    return true;
}

namespace detail {

// Assembles the box x_t [0, Rbar_t) with the vacuous-min convention ([0,1]
// closed when no preferred school constrains test t).
inline Region lenient_box(const MarketSpec& market, const TypeView& type, const CutoffVector& c,
                          int school, std::vector<LenientCutoff>* out_cuts = nullptr) {
    Region box(market.num_tests);
    for (int t = 1; t <= market.num_tests; ++t) {
        const LenientCutoff lc = lenient_cutoff(market, type, c, school, t);
        box.per_test[static_cast<std::size_t>(t - 1)] =
            lc.vacuous ? Interval::closed(0.0, 1.0) : Interval::half_open(0.0, lc.value);
        if (out_cuts) out_cuts->push_back(lc);
    }
    return box;
}

inline bool preferred_to_all_sure_wins(const MarketSpec& market, const TypeView& type,
                                       const CutoffVector& c, int school) {
    // Only listed schools can be assigned, and the school itself may be a
    // sure win (the outside option).
    for (int w : sure_win_set(market, type, c)) {
        if (w == school || !type.lists(w)) continue;
        if (!type.prefers(school, w)) return false;
    }
    return true;
}

}  // namespace detail

// The set of score vectors at which the type has positive probability of
// assignment to `school` under fixed cutoffs c.
inline Region eligibility_set(const MarketSpec& market, const TypeView& type,
                              const CutoffVector& c, int school) {
    const SchoolSpec& sp = market.school(school);
    if (!type.lists(school)) return Region::empty_region(market.num_tests);
    std::vector<LenientCutoff> cuts;
    Region box = detail::lenient_box(market, type, c, school, &cuts);
    for (const auto& lc : cuts)
        if (!lc.vacuous && lc.value <= 0.0) return Region::empty_region(market.num_tests);

    if (sp.is_lottery()) {
        if (!favorite_lottery_positive(market, type, c, school))
            return Region::empty_region(market.num_tests);
        return box;
    }
    // Test-score school: must clear own cutoff, not be dominated by a sure
    // win, and have room between own cutoff and the most lenient preferred one.
    if (!detail::preferred_to_all_sure_wins(market, type, c, school))
        return Region::empty_region(market.num_tests);
    const int t0 = sp.index;
    const double own = clear_threshold(sp, type.qualifier_at(school), c.at(school));
    const LenientCutoff& upper = cuts[static_cast<std::size_t>(t0 - 1)];
    if (!(upper.value > own)) return Region::empty_region(market.num_tests);
    const Interval own_band = upper.vacuous ? Interval::closed(own, 1.0)
                                            : Interval::half_open(own, upper.value);
    return box.slice(t0, own_band);
}

enum class Variation { LotteryDriven, RdDriven, Unidentified };

inline const char* to_string(Variation v) {
    switch (v) {
        case Variation::LotteryDriven: return "lottery";
        case Variation::RdDriven: return "rd";
        case Variation::Unidentified: return "unidentified";
    }
    return "?";
}

struct ContrastReport {
    int preferred_school = 0;   // s1, the more preferred of the pair
    int other_school = 0;       // s0
    Region region;              // closure(E_s0) n closure(E_s1)
    Variation variation = Variation::Unidentified;
    std::optional<std::pair<int, double>> rd_cutoff;  // (test, score cutoff) when RD-driven
};

// Intersection of eligibility-set closures for a pair s1 > s0, classified by
// the kind of the more-preferred school.
inline ContrastReport identified_contrast_region(const MarketSpec& market, const TypeView& type,
                                                 const CutoffVector& c, int s1, int s0) {
    if (!type.lists(s1) || !type.lists(s0) || !type.prefers(s1, s0))
        throw ConfigError("identified_contrast_region: school " + std::to_string(s1) + " is not preferred to " + std::to_string(s0));
    ContrastReport rep;
    rep.preferred_school = s1;
    rep.other_school = s0;
    rep.region = Region::empty_region(market.num_tests);

    const Region e0 = eligibility_set(market, type, c, s0);
    const Region e1 = eligibility_set(market, type, c, s1);
    if (e0.empty() || e1.empty()) return rep;

    const SchoolSpec& sp1 = market.school(s1);
    if (sp1.is_lottery()) {
        rep.region = e0.closure();
        rep.variation = Variation::LotteryDriven;
        return rep;
    }
    const int t1 = sp1.index;
    const double r1 = clear_threshold(sp1, type.qualifier_at(s1), c.at(s1));
    const LenientCutoff upper = lenient_cutoff(market, type, c, s0, t1);
    if (upper.vacuous || upper.value != r1 || !(r1 > 0.0)) return rep;
    rep.region = e0.closure().slice(t1, Interval::point(r1));
    if (rep.region.empty()) {
        rep.region = Region::empty_region(market.num_tests);
        return rep;
    }
    rep.variation = Variation::RdDriven;
    rep.rd_cutoff = std::make_pair(t1, r1);
    return rep;
}

struct AteEnumeration {
    struct Entry {
        std::size_t type_index;
        ContrastReport report;
    };
    std::vector<Entry> entries;
    double positive_measure_mass = 0.0;  // sum of lottery-driven region measures
    int rd_count = 0;                    // zero-measure (RD) contrasts
    int unidentified_count = 0;
};

// Every ordered pair (s1 preferred to s0) on each census type's list.
inline AteEnumeration enumerate_identified_ates(const MarketSpec& market, const CutoffVector& c,
                                                const std::vector<StudentProfile>& census) {
    AteEnumeration out;
    for (std::size_t ti = 0; ti < census.size(); ++ti) {
        const TypeView type = type_view(census[ti]);
        const auto& prefs = census[ti].preferences;
        for (std::size_t a = 0; a < prefs.size(); ++a) {
            for (std::size_t b = a + 1; b < prefs.size(); ++b) {
                ContrastReport rep = identified_contrast_region(market, type, c, prefs[a], prefs[b]);
                switch (rep.variation) {
                    case Variation::LotteryDriven:
                        out.positive_measure_mass += rep.region.measure();
                        break;
                    case Variation::RdDriven: out.rd_count += 1; break;
                    case Variation::Unidentified: out.unidentified_count += 1; break;
                }
                out.entries.push_back({ti, std::move(rep)});
            }
        }
    }
    return out;
}

}  // namespace schoolrd
