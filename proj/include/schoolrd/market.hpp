#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "schoolrd/error.hpp"

namespace schoolrd {

enum class SchoolKind { Lottery, TestScore };

constexpr int kOutsideSchool = 0;
constexpr double kInfiniteCapacity = std::numeric_limits<double>::infinity();

// A school's assignment-relevant configuration. Priorities are lexicographic
// in (qualifier, tie-breaker); the tie-breaker is the test score `index` for
// test-score schools and the lottery draw `index` for lottery schools. Both
// indices are 1-based.
struct SchoolSpec {
    int id = 0;
    double capacity_share = 0.0;  // population share q*; finite-sample seats = floor(N*q*)
    SchoolKind kind = SchoolKind::Lottery;
    int index = 1;
    int qualifier_max = 0;

    bool is_lottery() const { return kind == SchoolKind::Lottery; }
    bool is_test() const { return kind == SchoolKind::TestScore; }

    std::int64_t seats(std::size_t n_students) const {
        if (capacity_share == kInfiniteCapacity) return std::numeric_limits<std::int64_t>::max();
        return static_cast<std::int64_t>(std::floor(capacity_share * static_cast<double>(n_students)));
    }
};

struct MarketSpec {
    std::vector<SchoolSpec> schools;  // position == id
    int num_tests = 0;
    int num_lotteries = 0;

    const SchoolSpec& school(int id) const { return schools.at(static_cast<std::size_t>(id)); }
    int num_schools() const { return static_cast<int>(schools.size()); }

    void validate() const {
        if (schools.empty()) throw ConfigError("market: no schools");
        for (int s = 0; s < num_schools(); ++s) {
            const auto& sp = schools[static_cast<std::size_t>(s)];
            if (sp.id != s) throw ConfigError("market: school ids must be 0..M in order, got id " + std::to_string(sp.id) + " at position " + std::to_string(s));
            if (sp.qualifier_max < 0) throw ConfigError("market: negative qualifier_max at school " + std::to_string(s));
            if (!(sp.capacity_share >= 0.0)) throw ConfigError("market: negative capacity at school " + std::to_string(s));
            const int bound = sp.is_test() ? num_tests : num_lotteries;
            if (sp.index < 1 || sp.index > bound)
                throw ConfigError("market: school " + std::to_string(s) + " uses out-of-range " + (sp.is_test() ? std::string("test") : std::string("lottery")) + " index " + std::to_string(sp.index));
        }
        const auto& outside = schools.front();
        if (!outside.is_lottery() || outside.capacity_share != kInfiniteCapacity)
            throw ConfigError("market: school 0 must be an infinite-capacity lottery school");
    }
};

// Assignment-relevant student data. `preferences` is a strict partial list
// over school ids, always terminated by school 0; unlisted schools are never
// proposed to. `qualifiers` is indexed by school id.
struct StudentProfile {
    std::vector<int> preferences;
    std::vector<double> scores;        // size T, each in [0,1]
    std::vector<int> qualifiers;       // size M+1, 0 <= Q_s <= qbar_s
    std::vector<double> lottery_draws; // size L, each in [0,1]

    int rank_of(int school) const {
        for (std::size_t k = 0; k < preferences.size(); ++k)
            if (preferences[k] == school) return static_cast<int>(k);
        return -1;
    }
    bool prefers(int a, int b) const {  // strict: a listed before b
        const int ra = rank_of(a), rb = rank_of(b);
        if (ra < 0) return false;
        return rb < 0 ? true : ra < rb;
    }
};

inline void validate_profile(const MarketSpec& market, const StudentProfile& st,
                             std::size_t student_index) {
    const auto bad = [&](const std::string& what) {
        throw DataError("student " + std::to_string(student_index) + ": " + what);
    };
    if (st.preferences.empty() || st.preferences.back() != kOutsideSchool)
        bad("preference list must end in school 0");
    std::vector<bool> seen(static_cast<std::size_t>(market.num_schools()), false);
    for (int s : st.preferences) {
        if (s < 0 || s >= market.num_schools()) bad("unknown school " + std::to_string(s) + " in preferences");
        if (seen[static_cast<std::size_t>(s)]) bad("duplicate school " + std::to_string(s) + " in preferences");
        seen[static_cast<std::size_t>(s)] = true;
    }
    if (static_cast<int>(st.scores.size()) != market.num_tests) bad("expected " + std::to_string(market.num_tests) + " test scores");
    for (double r : st.scores)
        if (!(r >= 0.0 && r <= 1.0)) bad("test score outside [0,1]");
    if (static_cast<int>(st.lottery_draws.size()) != market.num_lotteries) bad("expected " + std::to_string(market.num_lotteries) + " lottery draws");
    for (double u : st.lottery_draws)
        if (!(u >= 0.0 && u <= 1.0)) bad("lottery draw outside [0,1]");
    if (static_cast<int>(st.qualifiers.size()) != market.num_schools()) bad("expected one qualifier per school");
    for (int s = 0; s < market.num_schools(); ++s) {
        const int q = st.qualifiers[static_cast<std::size_t>(s)];
        if (q < 0 || q > market.school(s).qualifier_max)
            bad("qualifier at school " + std::to_string(s) + " outside {0..qbar}");
    }
}

// Priority score V_is = (Q_is + tiebreak) / (qbar_s + 1). Implements the
// lexicographic (qualifier, tie-breaker) order as a scalar in [0,1]; higher
// is better.
inline double priority_score(const StudentProfile& st, const SchoolSpec& school) {
    const std::size_t tie_index = static_cast<std::size_t>(school.index - 1);
    double tiebreak;
    if (school.is_test()) {
        if (tie_index >= st.scores.size()) throw ConfigError("priority_score: test index " + std::to_string(school.index) + " not covered by student scores");
        tiebreak = st.scores[tie_index];
    } else {
        if (tie_index >= st.lottery_draws.size()) throw ConfigError("priority_score: lottery index " + std::to_string(school.index) + " not covered by student draws");
        tiebreak = st.lottery_draws[tie_index];
    }
    const int q = st.qualifiers.empty() ? 0 : st.qualifiers.at(static_cast<std::size_t>(school.id));
    return (static_cast<double>(q) + tiebreak) / (static_cast<double>(school.qualifier_max) + 1.0);
}

}  // namespace schoolrd
