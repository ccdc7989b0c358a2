#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "schoolrd/eligibility.hpp"
#include "schoolrd/error.hpp"
#include "schoolrd/linalg.hpp"
#include "schoolrd/market.hpp"

namespace schoolrd {

struct SchoolPair {
    int treated_school = 0;  // s1: test-score school whose cutoff drives the contrast
    int control_school = 0;  // s0
};

// Everything the selection indicator and the side fits need about the
// contrast: the pair, the cutoff vector in force, the score-space cutoff rho,
// and the bandwidth.
struct SelectionContext {
    SchoolPair pair;
    CutoffVector cutoffs;
    double bandwidth = 0.0;
    double rho = 0.0;  // r_{s1,t1}(cutoffs)
    int running_test = 0;

    static SelectionContext make(const MarketSpec& market, SchoolPair pair,
                                 const CutoffVector& cutoffs, double h) {
        const SchoolSpec& s1 = market.school(pair.treated_school);
        if (!s1.is_test()) throw ConfigError("selection context: school " + std::to_string(pair.treated_school) + " must be a test-score school");
        if (pair.treated_school == pair.control_school) throw ConfigError("selection context: pair must name two schools");
        cutoffs.validate(market);
        if (!(h > 0.0)) throw ConfigError("selection context: bandwidth must be positive");
        SelectionContext ctx;
        ctx.pair = pair;
        ctx.cutoffs = cutoffs;
        ctx.bandwidth = h;
        ctx.running_test = s1.index;
        ctx.rho = school_test_cutoff(s1, cutoffs);
        if (!(ctx.rho > 0.0 && ctx.rho < 1.0))
            throw DegenerateError("selection context: score-space cutoff is not interior");
        return ctx;
    }
};

// Sample selection J: the product of indicators restricting to students who,
// near the cutoff, face exactly the treated-vs-control margin. Split into the
// h-independent clauses and the band memberships (kept separate so the two
// side fits share one J).
inline bool selection_indicator(const MarketSpec& market, const StudentProfile& student,
                                const SelectionContext& ctx) {
    const TypeView type = type_view(student);
    const int s1 = ctx.pair.treated_school;
    const int s0 = ctx.pair.control_school;
    const SchoolSpec& sp1 = market.school(s1);
    const SchoolSpec& sp0 = market.school(s0);
    const int t1 = ctx.running_test;
    const double h = ctx.bandwidth;

    // Preference clause of I: s1 listed ahead of s0.
    if (!type.lists(s1) || !type.lists(s0) || !type.prefers(s1, s0)) return false;
    // Remaining clause of I: no sure-win lottery school (other than the
    // control school itself) is preferred to the control school.
    if (!detail::preferred_to_all_sure_wins(market, type, ctx.cutoffs, s0)) return false;

    // Own-margin clause: the student's qualifier level at s1 must put their
    // personal cutoff exactly at rho; levels pinned at 0 or 1 carry no
    // variation there and would contaminate the side limits.
    if (clear_threshold(sp1, type.qualifier_at(s1), ctx.cutoffs.at(s1)) != ctx.rho) return false;

    // I_10: nothing preferred to s0 on the running test binds below rho.
    const LenientCutoff lenient_s0_t1 = lenient_cutoff(market, type, ctx.cutoffs, s0, t1);
    if (!(ctx.rho <= lenient_s0_t1.value)) return false;

    // I_1: the whole band stays below every school preferred to s1 on the
    // running test; when the control school shares the test, the band must
    // also stay above the control school's own cutoff.
    const LenientCutoff lenient_s1_t1 = lenient_cutoff(market, type, ctx.cutoffs, s1, t1);
    if (!(ctx.rho + h < lenient_s1_t1.value)) return false;
    if (sp0.is_test() && sp0.index == t1) {
        const double own0 = clear_threshold(sp0, type.qualifier_at(s0), ctx.cutoffs.at(s0));
        if (!(ctx.rho - h > own0)) return false;
    }

    // I_0: on its own test, the control school must be cleared without
    // clearing anything preferred.
    if (sp0.is_test() && sp0.index != t1) {
        const double r = student.scores.at(static_cast<std::size_t>(sp0.index - 1));
        const double own0 = clear_threshold(sp0, type.qualifier_at(s0), ctx.cutoffs.at(s0));
        const LenientCutoff up = lenient_cutoff(market, type, ctx.cutoffs, s0, sp0.index);
        if (!(r >= own0 && r <= up.value)) return false;
    }

    // I_t for the remaining tests: no school preferred to s0 is cleared.
    for (int t = 1; t <= market.num_tests; ++t) {
        if (t == t1 || (sp0.is_test() && t == sp0.index)) continue;
        const double r = student.scores.at(static_cast<std::size_t>(t - 1));
        const LenientCutoff up = lenient_cutoff(market, type, ctx.cutoffs, s0, t);
        if (!(r > 0.0 && r <= up.value)) return false;
    }
    return true;
}

enum class Side { Treated, Control };  // right and left of the cutoff

// Band membership. A score exactly at rho belongs to the treated (right) band
// only; the printed formulas close both bands at rho, which would double
// count it.
inline bool in_band(const SelectionContext& ctx, const StudentProfile& student, Side side) {
    const double r = student.scores.at(static_cast<std::size_t>(ctx.running_test - 1));
    if (side == Side::Treated) return r >= ctx.rho && r <= ctx.rho + ctx.bandwidth;
    return r >= ctx.rho - ctx.bandwidth && r < ctx.rho;
}

// Realized indicator D^(j): fails every lottery school preferred to the
// side's school; on the control side of a lottery control school, also wins
// there.
inline bool side_selection_realized(const MarketSpec& market, const StudentProfile& student,
                                    const SelectionContext& ctx, Side side) {
    const TypeView type = type_view(student);
    const int target = side == Side::Treated ? ctx.pair.treated_school : ctx.pair.control_school;
    for (const int s : type.preferred_to(target)) {
        const SchoolSpec& sp = market.school(s);
        if (!sp.is_lottery()) continue;
        const double u = student.lottery_draws.at(static_cast<std::size_t>(sp.index - 1));
        if (u >= clear_threshold(sp, type.qualifier_at(s), ctx.cutoffs.at(s))) return false;
    }
    if (side == Side::Control) {
        const SchoolSpec& sp0 = market.school(ctx.pair.control_school);
        if (sp0.is_lottery()) {
            const double u = student.lottery_draws.at(static_cast<std::size_t>(sp0.index - 1));
            if (!(u > clear_threshold(sp0, type.qualifier_at(sp0.id), ctx.cutoffs.at(sp0.id))))
                return false;
        }
    }
    return true;
}

// P_U(D^(j) = 1 | Q, preferences): exact product of per-lottery interval
// measures under independent uniform draws; constraints sharing a lottery are
// intersected before measuring.
inline double qualification_probability(const MarketSpec& market, const StudentProfile& student,
                                        const SelectionContext& ctx, Side side) {
    const TypeView type = type_view(student);
    const int target = side == Side::Treated ? ctx.pair.treated_school : ctx.pair.control_school;
    std::vector<double> hi(static_cast<std::size_t>(market.num_lotteries), 1.0);
    std::vector<double> lo(static_cast<std::size_t>(market.num_lotteries), 0.0);
    for (const int s : type.preferred_to(target)) {
        const SchoolSpec& sp = market.school(s);
        if (!sp.is_lottery()) continue;
        const std::size_t l = static_cast<std::size_t>(sp.index - 1);
        hi[l] = std::min(hi[l], clear_threshold(sp, type.qualifier_at(s), ctx.cutoffs.at(s)));
    }
    if (side == Side::Control) {
        const SchoolSpec& sp0 = market.school(ctx.pair.control_school);
        if (sp0.is_lottery()) {
            const std::size_t l = static_cast<std::size_t>(sp0.index - 1);
            lo[l] = std::max(lo[l], clear_threshold(sp0, type.qualifier_at(sp0.id), ctx.cutoffs.at(sp0.id)));
        }
    }
    double p = 1.0;
    for (std::size_t l = 0; l < hi.size(); ++l) p *= std::max(0.0, hi[l] - lo[l]);
    return p;
}

// IPW proxy outcome Y^(j) = D^(j) Y / pi^(j) with the 0/0 = 0 convention.
inline double proxy_outcome(const MarketSpec& market, const StudentProfile& student,
                            double observed_outcome, const SelectionContext& ctx, Side side) {
    const bool d = side_selection_realized(market, student, ctx, side);
    const double pi = qualification_probability(market, student, ctx, side);
    if (!d) return 0.0;
    if (pi == 0.0)
        throw DataError("proxy_outcome: realized selection with zero selection probability; draws inconsistent with cutoffs");
    return observed_outcome / pi;
}

struct SideFit {
    double intercept = 0.0;
    double slope = 0.0;
    std::size_t n = 0;        // in-band selected count
    double sigma2 = 0.0;      // variance contribution, already scaled by 4Nh/N_side
};

// Uniform-kernel local linear fit of the side's proxy outcome on the centered
// running score, over in-band selected students, plus the plug-in variance
// term 4 N h / N_side ( mean(Y^2) - intercept^2 ).
inline SideFit local_linear_side(const MarketSpec& market,
                                 const std::vector<StudentProfile>& students,
                                 const std::vector<double>& outcomes,
                                 const std::vector<char>& selected, const SelectionContext& ctx,
                                 Side side) {
    if (students.size() != outcomes.size() || students.size() != selected.size())
        throw ConfigError("local_linear_side: input lengths differ");
    double s0 = 0, s1 = 0, s2 = 0, sy = 0, sxy = 0, syy = 0;
    std::size_t n = 0;
    double first_x = 0.0;
    bool distinct = false;
    for (std::size_t i = 0; i < students.size(); ++i) {
        if (!selected[i] || !in_band(ctx, students[i], side)) continue;
        const double x =
            students[i].scores.at(static_cast<std::size_t>(ctx.running_test - 1)) - ctx.rho;
        const double y = proxy_outcome(market, students[i], outcomes[i], ctx, side);
        if (n == 0) first_x = x;
        else if (x != first_x) distinct = true;
        n += 1;
        s0 += 1.0;
        s1 += x;
        s2 += x * x;
        sy += y;
        sxy += x * y;
        syy += y * y;
    }
    if (n < 2 || !distinct)
        throw DegenerateError("local_linear_side: fewer than two distinct in-band scores on the " +
                              std::string(side == Side::Treated ? "treated" : "control") +
                              " side (n=" + std::to_string(n) + ")");
    const double det = s0 * s2 - s1 * s1;
    if (!(std::fabs(det) > 0.0)) throw DegenerateError("local_linear_side: collinear design");
    SideFit fit;
    fit.intercept = (s2 * sy - s1 * sxy) / det;
    fit.slope = (s0 * sxy - s1 * sy) / det;
    fit.n = n;
    // Plug-in variance of the intercept: (4 N h / N_side)(mean Y^2 - b0^2)
    // normalizes the sqrt(N h)-scaled estimator; dividing by N h gives the
    // intercept's own standard error, which the interval uses. The moment
    // difference can round epsilon-negative for noiseless sloped outcomes.
    const double moment = syy / s0 - fit.intercept * fit.intercept;
    fit.sigma2 = std::max(0.0, 4.0 / s0 * moment);
    return fit;
}

struct EstimateReport {
    double tau_hat = 0.0;
    double beta_plus[2] = {0.0, 0.0};   // treated-side intercept, slope
    double beta_minus[2] = {0.0, 0.0};  // control-side intercept, slope
    std::size_t n_plus = 0, n_minus = 0;
    double sigma2_hat = 0.0;
    double ci_lower = 0.0, ci_upper = 0.0;  // 95% Wald interval
    double bandwidth = 0.0;
    double cutoff = 0.0;  // rho actually used
    // Recorded, not enforced: bandwidth rate-policy checks.
    bool below_sqrt_rate = false;    // h <= N^{-1/2}: too narrow for cutoff noise
    bool above_undersmoothing = false;  // h >= N^{-1/5}: bias may dominate the CI
};

// Local-linear contrast at the cutoff: difference of side intercepts, with
// the plug-in variance and Wald interval. Used for both the feasible
// estimator (sample cutoffs) and the oracle (population cutoffs).
inline EstimateReport estimate_rd_ate(const MarketSpec& market,
                                      const std::vector<StudentProfile>& students,
                                      const std::vector<double>& outcomes, SchoolPair pair,
                                      const CutoffVector& cutoffs, double h) {
    const SelectionContext ctx = SelectionContext::make(market, pair, cutoffs, h);
    std::vector<char> selected(students.size(), 0);
    for (std::size_t i = 0; i < students.size(); ++i)
        selected[i] = selection_indicator(market, students[i], ctx) ? 1 : 0;
    const SideFit plus = local_linear_side(market, students, outcomes, selected, ctx, Side::Treated);
    const SideFit minus = local_linear_side(market, students, outcomes, selected, ctx, Side::Control);
    EstimateReport rep;
    rep.tau_hat = plus.intercept - minus.intercept;
    rep.beta_plus[0] = plus.intercept;
    rep.beta_plus[1] = plus.slope;
    rep.beta_minus[0] = minus.intercept;
    rep.beta_minus[1] = minus.slope;
    rep.n_plus = plus.n;
    rep.n_minus = minus.n;
    rep.sigma2_hat = plus.sigma2 + minus.sigma2;
    const double se = std::sqrt(rep.sigma2_hat);
    rep.ci_lower = rep.tau_hat - 1.96 * se;
    rep.ci_upper = rep.tau_hat + 1.96 * se;
    rep.bandwidth = h;
    rep.cutoff = ctx.rho;
    const double n = static_cast<double>(students.size());
    rep.below_sqrt_rate = h <= std::pow(n, -0.5);
    rep.above_undersmoothing = h >= std::pow(n, -0.2);
    return rep;
}

// The infeasible benchmark: identical computation at the population cutoffs.
inline EstimateReport oracle_estimate(const MarketSpec& market,
                                      const std::vector<StudentProfile>& students,
                                      const std::vector<double>& outcomes, SchoolPair pair,
                                      const CutoffVector& population_cutoffs, double h) {
    return estimate_rd_ate(market, students, outcomes, pair, population_cutoffs, h);
}

}  // namespace schoolrd
