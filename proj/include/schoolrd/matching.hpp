#pragma once

#include <algorithm>
#include <cstdint>
#include <queue>
#include <vector>

#include "schoolrd/dgp.hpp"
#include "schoolrd/eligibility.hpp"
#include "schoolrd/error.hpp"
#include "schoolrd/market.hpp"
#include "schoolrd/parallel.hpp"

namespace schoolrd {

struct MatchResult {
    std::vector<int> assignment;  // matched school id per student
    CutoffVector cutoffs;
    int rounds = 0;
};

namespace detail {

// Priority order at a school: higher score wins; exact ties (possible in
// finite precision) break toward the lower student index.
struct Proposal {
    double score;
    std::uint32_t student;
};
struct WorstFirst {
    bool operator()(const Proposal& a, const Proposal& b) const {
        if (a.score != b.score) return a.score > b.score;  // keep the worst on top
        return a.student < b.student;
    }
};

}  // namespace detail

// Student-proposing deferred acceptance. Stage-synchronous: every unmatched
// student proposes each round to the next school left on their list; schools
// keep the best proposals up to capacity and reject the rest.
inline MatchResult run_da(const MarketSpec& market, const std::vector<StudentProfile>& students,
                          std::size_t capacity_n) {
    market.validate();
    const std::size_t n = students.size();
    const int M = market.num_schools();
    for (std::size_t i = 0; i < n; ++i) validate_profile(market, students[i], i);

    std::vector<std::int64_t> seats(static_cast<std::size_t>(M));
    for (int s = 0; s < M; ++s) seats[static_cast<std::size_t>(s)] = market.school(s).seats(capacity_n);

    // Per-student cached priority scores along their own list.
    std::vector<std::uint32_t> next_choice(n, 0);
    std::vector<std::priority_queue<detail::Proposal, std::vector<detail::Proposal>, detail::WorstFirst>>
        held(static_cast<std::size_t>(M));

    std::vector<std::uint32_t> proposers(n);
    for (std::size_t i = 0; i < n; ++i) proposers[i] = static_cast<std::uint32_t>(i);
    std::vector<std::uint32_t> rejected;

    const long long round_cap = static_cast<long long>(n) * static_cast<long long>(M) + 1;
    int rounds = 0;
    while (!proposers.empty()) {
        if (++rounds > round_cap)
            throw Error("run_da: round cap exceeded; matching failed to terminate");
        rejected.clear();
        for (const std::uint32_t i : proposers) {
            const auto& prefs = students[i].preferences;
            if (next_choice[i] >= prefs.size())
                throw Error("run_da: student " + std::to_string(i) + " exhausted their list");
            const int s = prefs[next_choice[i]];
            const SchoolSpec& sp = market.school(s);
            const std::int64_t cap = seats[static_cast<std::size_t>(s)];
            if (cap <= 0) {
                next_choice[i] += 1;
                rejected.push_back(i);
                continue;
            }
            auto& q = held[static_cast<std::size_t>(s)];
            q.push({priority_score(students[i], sp), i});
            if (static_cast<std::int64_t>(q.size()) > cap) {
                const std::uint32_t out = q.top().student;
                q.pop();
                next_choice[out] += 1;
                rejected.push_back(out);
            }
        }
        proposers.swap(rejected);
    }

    MatchResult res;
    res.rounds = rounds;
    res.assignment.assign(n, kOutsideSchool);
    res.cutoffs.values.assign(static_cast<std::size_t>(M), 0.0);
    for (int s = 0; s < M; ++s) {
        auto& q = held[static_cast<std::size_t>(s)];
        const std::int64_t cap = seats[static_cast<std::size_t>(s)];
        const bool filled = cap <= static_cast<std::int64_t>(q.size());
        if (cap == 0) {
            res.cutoffs.values[static_cast<std::size_t>(s)] = 1.0;  // degenerate: no seats
            continue;
        }
        if (filled && s != kOutsideSchool)
            res.cutoffs.values[static_cast<std::size_t>(s)] = q.empty() ? 0.0 : q.top().score;
        while (!q.empty()) {
            res.assignment[q.top().student] = s;
            q.pop();
        }
    }
    return res;
}

inline MatchResult run_da(const MarketSpec& market, const std::vector<StudentProfile>& students) {
    return run_da(market, students, students.size());
}

// Cutoffs from a finished match: the least-favorable admitted score when the
// school is filled to capacity, 0 otherwise.
inline CutoffVector extract_cutoffs(const MatchResult& result, const MarketSpec& market,
                                    const std::vector<StudentProfile>& students,
                                    std::size_t capacity_n) {
    const int M = market.num_schools();
    CutoffVector c;
    c.values.assign(static_cast<std::size_t>(M), 0.0);
    std::vector<std::int64_t> count(static_cast<std::size_t>(M), 0);
    std::vector<double> worst(static_cast<std::size_t>(M), 2.0);
    for (std::size_t i = 0; i < students.size(); ++i) {
        const int s = result.assignment[i];
        count[static_cast<std::size_t>(s)] += 1;
        const double v = priority_score(students[i], market.school(s));
        worst[static_cast<std::size_t>(s)] = std::min(worst[static_cast<std::size_t>(s)], v);
    }
    for (int s = 1; s < M; ++s) {
        const std::int64_t cap = market.school(s).seats(capacity_n);
        if (cap == 0) {
            c.values[static_cast<std::size_t>(s)] = 1.0;
            continue;
        }
        if (count[static_cast<std::size_t>(s)] >= cap)
            c.values[static_cast<std::size_t>(s)] = worst[static_cast<std::size_t>(s)];
    }
    return c;
}

// Favorite school whose cutoff the student's score clears (weak inequality,
// exactly as the matching is rationalized). School 0 always clears.
inline int assign_at_cutoffs(const MarketSpec& market, const StudentProfile& student,
                             const CutoffVector& cutoffs) {
    for (const int s : student.preferences) {
        if (priority_score(student, market.school(s)) >= cutoffs.at(s)) return s;
    }
    return kOutsideSchool;
}

struct BlockingPair {
    std::uint32_t student;
    int school;
};

// Brute-force scan for pairs (i, s) where i prefers s to their match and s
// would take them: s has a free seat or holds someone with a lower score.
inline std::vector<BlockingPair> check_stability(const MatchResult& result,
                                                 const MarketSpec& market,
                                                 const std::vector<StudentProfile>& students,
                                                 std::size_t capacity_n) {
    const int M = market.num_schools();
    std::vector<std::int64_t> count(static_cast<std::size_t>(M), 0);
    std::vector<double> worst(static_cast<std::size_t>(M), 2.0);
    for (std::size_t i = 0; i < students.size(); ++i) {
        const int s = result.assignment[i];
        count[static_cast<std::size_t>(s)] += 1;
        worst[static_cast<std::size_t>(s)] =
            std::min(worst[static_cast<std::size_t>(s)], priority_score(students[i], market.school(s)));
    }
    std::vector<BlockingPair> blocking;
    for (std::size_t i = 0; i < students.size(); ++i) {
        for (const int s : students[i].preferences) {
            if (s == result.assignment[i]) break;  // everything after is less preferred
            const std::int64_t cap = market.school(s).seats(capacity_n);
            const bool undersubscribed = count[static_cast<std::size_t>(s)] < cap;
            const bool outranks = count[static_cast<std::size_t>(s)] > 0 &&
                                  priority_score(students[i], market.school(s)) > worst[static_cast<std::size_t>(s)];
            if (undersubscribed || outranks) blocking.push_back({static_cast<std::uint32_t>(i), s});
        }
    }
    return blocking;
}

struct ContinuumCutoffs {
    CutoffVector cutoffs;
    bool converged = false;
    int repetitions = 0;
    double max_disagreement = 0.0;
};

// Population cutoffs by large-N sampling: run the match on reference_n
// synthetic students under independent seeds until consecutive estimates
// agree within tolerance. Non-convergence returns the averaged estimate with
// the flag down, never a failure.
inline ContinuumCutoffs solve_continuum_cutoffs(const MarketSpec& market, const DgpSpec& dgp,
                                                std::size_t reference_n, double tolerance,
                                                std::uint64_t seed, int max_repetitions = 6,
                                                int threads = 0) {
    market.validate();
    dgp.validate();
    std::vector<CutoffVector> estimates;
    ContinuumCutoffs out;
    auto run_one = [&](std::uint64_t s) {
        const auto students = generate_students(dgp, reference_n, s);
        const MatchResult res = run_da(market, students);
        return res.cutoffs;
    };
    // Seeds evaluated two at a time; merge order is fixed by seed index.
    for (int rep = 0; rep < max_repetitions; ++rep) {
        std::vector<CutoffVector> batch(estimates.empty() ? 2 : 1);
        const std::size_t base = estimates.size();
        parallel_for(batch.size(), [&](std::size_t k) {
            batch[k] = run_one(derive_seed(seed, base + k));
        }, threads);
        for (auto& b : batch) estimates.push_back(std::move(b));
        const auto& a = estimates[estimates.size() - 2].values;
        const auto& b = estimates[estimates.size() - 1].values;
        double dis = 0.0;
        for (std::size_t s = 0; s < a.size(); ++s) dis = std::max(dis, std::fabs(a[s] - b[s]));
        out.max_disagreement = dis;
        out.repetitions = static_cast<int>(estimates.size());
        if (dis < tolerance) {
            out.converged = true;
            break;
        }
    }
    const std::size_t m = estimates.front().values.size();
    out.cutoffs.values.assign(m, 0.0);
    for (const auto& e : estimates)
        for (std::size_t s = 0; s < m; ++s) out.cutoffs.values[s] += e.values[s];
    for (std::size_t s = 0; s < m; ++s)
        out.cutoffs.values[s] /= static_cast<double>(estimates.size());
    out.cutoffs.values[0] = 0.0;
    return out;
}

}  // namespace schoolrd
