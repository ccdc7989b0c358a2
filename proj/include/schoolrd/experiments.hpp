#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "schoolrd/dgp.hpp"
#include "schoolrd/error.hpp"
#include "schoolrd/estimator.hpp"
#include "schoolrd/matching.hpp"
#include "schoolrd/parallel.hpp"

namespace schoolrd {

// Bandwidth policy h(N) = kappa * N^(-exponent).
struct BandwidthPolicy {
    double kappa = 1.0;
    double exponent = 0.3;
    double operator()(std::size_t n) const {
        return kappa * std::pow(static_cast<double>(n), -exponent);
    }
};

struct ExperimentReport {
    std::string name;
    std::uint64_t seed = 0;
    int replications = 0;
    std::vector<std::size_t> n_grid;
    std::vector<std::pair<std::string, double>> metrics;  // ordered key/value
    std::vector<std::string> notes;
    bool degenerate = false;
    bool pass = false;
    double runtime_seconds = 0.0;
    // Per-replication rows for the CSV artifact.
    std::vector<std::string> row_columns;
    std::vector<std::vector<double>> rows;

    double metric(const std::string& key) const {
        for (const auto& [k, v] : metrics)
            if (k == key) return v;
        throw ConfigError("experiment report: no metric named " + key);
    }
};

namespace detail {

inline double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline double quantile_of(std::vector<double> v, double q) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const std::size_t k = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(k);
    return k + 1 < v.size() ? v[k] * (1.0 - frac) + v[k + 1] * frac : v[k];
}

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

}  // namespace detail

// Population-level boundary contrast for a DGP whose market-clearing cutoffs
// are known analytically: the type-weighted treated-minus-control mean gap at
// the score-space cutoff, weighting types by share x selection probability x
// running-score density at the cutoff.
inline double analytic_rd_estimand(const DgpSpec& dgp, SchoolPair pair) {
    dgp.validate();
    if (!dgp.known_cutoffs) throw ConfigError("analytic_rd_estimand: the dgp must carry known cutoffs");
    const CutoffVector& c = *dgp.known_cutoffs;
    const MarketSpec& market = dgp.market;
    const SchoolSpec& sp1 = market.school(pair.treated_school);
    const SchoolSpec& sp0 = market.school(pair.control_school);
    if (!sp1.is_test()) throw ConfigError("analytic_rd_estimand: treated school must be a test-score school");
    const int t1 = sp1.index;
    const double rho = school_test_cutoff(sp1, c);
    if (!(rho > 0.0 && rho < 1.0)) throw DegenerateError("analytic_rd_estimand: cutoff not interior");

    double wsum = 0.0, tsum = 0.0;
    for (const auto& ty : dgp.types) {
        const TypeView type{ty.preferences, ty.qualifiers};
        if (!type.lists(pair.treated_school) || !type.lists(pair.control_school)) continue;
        if (!type.prefers(pair.treated_school, pair.control_school)) continue;
        if (!detail::preferred_to_all_sure_wins(market, type, c, pair.control_school)) continue;
        if (clear_threshold(sp1, type.qualifier_at(sp1.id), c.at(sp1.id)) != rho) continue;
        const LenientCutoff up1 = lenient_cutoff(market, type, c, pair.treated_school, t1);
        if (!(rho < up1.value)) continue;
        const LenientCutoff up0 = lenient_cutoff(market, type, c, pair.control_school, t1);
        if (!(rho <= up0.value)) continue;
        if (sp0.is_test() && sp0.index == t1) {
            if (!(rho > clear_threshold(sp0, type.qualifier_at(sp0.id), c.at(sp0.id)))) continue;
        }
        // Off-running-test selection probability and conditional mean shifts.
        double w = ty.share * ty.score_density[static_cast<std::size_t>(t1 - 1)].pdf(rho);
        double mean_shift_t = 0.0, mean_shift_c = 0.0;
        bool feasible = true;
        for (int t = 1; t <= market.num_tests && feasible; ++t) {
            if (t == t1) continue;
            double lo = 0.0;
            const LenientCutoff up = lenient_cutoff(market, type, c, pair.control_school, t);
            double hi = up.value;
            if (sp0.is_test() && sp0.index == t)
                lo = clear_threshold(sp0, type.qualifier_at(sp0.id), c.at(sp0.id));
            const auto& dens = ty.score_density[static_cast<std::size_t>(t - 1)];
            const double mass = dens.cdf(hi) - dens.cdf(lo);
            if (!(mass > 0.0)) {
                feasible = false;
                break;
            }
            w *= mass;
            const auto trunc_mean = [&](const OutcomeMean& mu) {
                const auto& p = mu.per_test.at(static_cast<std::size_t>(t - 1));
                double v = 0.0;
                for (int k = 1; k <= 3; ++k)
                    v += p[static_cast<std::size_t>(k - 1)] * dens.partial_moment(k, lo, hi);
                return v / mass;
            };
            mean_shift_t += trunc_mean(ty.outcome_mean[static_cast<std::size_t>(pair.treated_school)]);
            mean_shift_c += trunc_mean(ty.outcome_mean[static_cast<std::size_t>(pair.control_school)]);
        }
        if (!feasible) continue;
        const double mu_t =
            ty.outcome_mean[static_cast<std::size_t>(pair.treated_school)].eval1(rho, t1) + mean_shift_t;
        const double mu_c =
            ty.outcome_mean[static_cast<std::size_t>(pair.control_school)].eval1(rho, t1) + mean_shift_c;
        wsum += w;
        tsum += w * (mu_t - mu_c);
    }
    if (!(wsum > 0.0)) throw DegenerateError("analytic_rd_estimand: no type is subject to the contrast");
    return tsum / wsum;
}

// Sampling check of the cutoff concentration rate: per-N median of the
// worst-school deviation |C_N - c| across replications, and the log-log slope.
inline ExperimentReport experiment_cutoff_convergence(const DgpSpec& dgp,
                                                      const std::vector<std::size_t>& n_grid,
                                                      int reps, std::uint64_t seed,
                                                      const CutoffVector& population_cutoffs,
                                                      double slope_lo = -0.6, double slope_hi = -0.4,
                                                      int threads = 0) {
    detail::Timer timer;
    dgp.validate();
    ExperimentReport rep;
    rep.name = "cutoff-convergence";
    rep.seed = seed;
    rep.replications = reps;
    rep.n_grid = n_grid;
    rep.row_columns = {"n", "rep", "max_deviation"};

    std::vector<double> medians;
    for (std::size_t gi = 0; gi < n_grid.size(); ++gi) {
        const std::size_t n = n_grid[gi];
        std::vector<double> devs(static_cast<std::size_t>(reps), 0.0);
        parallel_for(static_cast<std::size_t>(reps), [&](std::size_t r) {
            const auto students =
                generate_students(dgp, n, derive_seed(seed, gi * 1000003ULL + r));
            const MatchResult m = run_da(dgp.market, students);
            double d = 0.0;
            for (int s = 0; s < dgp.market.num_schools(); ++s)
                d = std::max(d, std::fabs(m.cutoffs.at(s) - population_cutoffs.at(s)));
            devs[r] = d;
        }, threads);
        for (std::size_t r = 0; r < devs.size(); ++r)
            rep.rows.push_back({static_cast<double>(n), static_cast<double>(r), devs[r]});
        medians.push_back(detail::median_of(devs));
        rep.metrics.emplace_back("median_dev_n" + std::to_string(n), medians.back());
    }
    if (std::any_of(medians.begin(), medians.end(), [](double m) { return m <= 0.0; })) {
        rep.degenerate = true;
        rep.notes.push_back("zero median deviation on the grid; slope undefined");
        rep.pass = false;
        rep.runtime_seconds = timer.seconds();
        return rep;
    }
    // Least-squares slope of log(median) on log(n).
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double k = static_cast<double>(n_grid.size());
    for (std::size_t i = 0; i < n_grid.size(); ++i) {
        const double x = std::log(static_cast<double>(n_grid[i]));
        const double y = std::log(medians[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
    rep.metrics.emplace_back("loglog_slope", slope);
    rep.pass = slope >= slope_lo && slope <= slope_hi;
    rep.runtime_seconds = timer.seconds();
    return rep;
}

// CI calibration of the boundary-contrast estimator on a DGP with an analytic
// target: empirical 95% coverage, mean standard error, mean bias.
inline ExperimentReport experiment_coverage(const DgpSpec& dgp, SchoolPair pair, std::size_t n,
                                            BandwidthPolicy h_policy, int reps,
                                            std::uint64_t seed, double coverage_lo = 0.90,
                                            double coverage_hi = 0.98, int threads = 0) {
    detail::Timer timer;
    const double target = analytic_rd_estimand(dgp, pair);
    const double h = h_policy(n);
    ExperimentReport rep;
    rep.name = "coverage";
    rep.seed = seed;
    rep.replications = reps;
    rep.n_grid = {n};
    rep.row_columns = {"rep", "tau_hat", "sigma_hat", "covered"};
    rep.rows.resize(static_cast<std::size_t>(reps));

    std::vector<int> failed(static_cast<std::size_t>(reps), 0);
    parallel_for(static_cast<std::size_t>(reps), [&](std::size_t r) {
        const Population pop = generate_population(dgp, n, derive_seed(seed, r));
        const MatchResult match = run_da(dgp.market, pop.students);
        std::vector<double> observed(pop.students.size());
        for (std::size_t i = 0; i < pop.students.size(); ++i)
            observed[i] = pop.potential[i][static_cast<std::size_t>(match.assignment[i])];
        try {
            const EstimateReport est =
                estimate_rd_ate(dgp.market, pop.students, observed, pair, match.cutoffs, h);
            const double covered =
                (est.ci_lower <= target && target <= est.ci_upper) ? 1.0 : 0.0;
            rep.rows[r] = {static_cast<double>(r), est.tau_hat, std::sqrt(est.sigma2_hat), covered};
        } catch (const DegenerateError&) {
            failed[r] = 1;
            rep.rows[r] = {static_cast<double>(r), 0.0, 0.0, -1.0};
        }
    }, threads);

    int n_fail = 0;
    double cov = 0.0, mean_sigma = 0.0, mean_tau = 0.0;
    int ok = 0;
    for (int r = 0; r < reps; ++r) {
        if (failed[static_cast<std::size_t>(r)]) {
            n_fail += 1;
            continue;
        }
        const auto& row = rep.rows[static_cast<std::size_t>(r)];
        mean_tau += row[1];
        mean_sigma += row[2];
        cov += row[3];
        ok += 1;
    }
    if (ok == 0) throw DegenerateError("experiment_coverage: every replication was degenerate");
    cov /= ok;
    mean_sigma /= ok;
    mean_tau /= ok;
    rep.metrics.emplace_back("target_tau", target);
    rep.metrics.emplace_back("bandwidth", h);
    rep.metrics.emplace_back("coverage", cov);
    rep.metrics.emplace_back("mean_sigma_hat", mean_sigma);
    rep.metrics.emplace_back("mean_bias", mean_tau - target);
    rep.metrics.emplace_back("degenerate_reps", static_cast<double>(n_fail));
    rep.pass = n_fail == 0 && cov >= coverage_lo && cov <= coverage_hi &&
               std::fabs(mean_tau - target) < 0.5 * mean_sigma;
    rep.runtime_seconds = timer.seconds();
    return rep;
}

// First-order equivalence of the feasible estimator (sample cutoffs) and the
// oracle (population cutoffs): per-N quantiles of sqrt(N h)|tau_hat - tau_check|
// and monotonicity of the median across the grid.
inline ExperimentReport experiment_oracle_gap(const DgpSpec& dgp, SchoolPair pair,
                                              const std::vector<std::size_t>& n_grid,
                                              BandwidthPolicy h_policy, int reps,
                                              std::uint64_t seed,
                                              const CutoffVector& population_cutoffs,
                                              int threads = 0) {
    detail::Timer timer;
    ExperimentReport rep;
    rep.name = "oracle-gap";
    rep.seed = seed;
    rep.replications = reps;
    rep.n_grid = n_grid;
    rep.row_columns = {"n", "rep", "scaled_gap"};

    std::vector<double> medians;
    for (std::size_t gi = 0; gi < n_grid.size(); ++gi) {
        const std::size_t n = n_grid[gi];
        const double h = h_policy(n);
        std::vector<double> gaps(static_cast<std::size_t>(reps), 0.0);
        std::vector<int> failed(static_cast<std::size_t>(reps), 0);
        parallel_for(static_cast<std::size_t>(reps), [&](std::size_t r) {
            const Population pop = generate_population(dgp, n, derive_seed(seed, gi * 7000003ULL + r));
            const MatchResult match = run_da(dgp.market, pop.students);
            std::vector<double> observed(pop.students.size());
            for (std::size_t i = 0; i < pop.students.size(); ++i)
                observed[i] = pop.potential[i][static_cast<std::size_t>(match.assignment[i])];
            try {
                const EstimateReport feasible =
                    estimate_rd_ate(dgp.market, pop.students, observed, pair, match.cutoffs, h);
                const EstimateReport oracle =
                    oracle_estimate(dgp.market, pop.students, observed, pair, population_cutoffs, h);
                gaps[r] = std::sqrt(static_cast<double>(n) * h) *
                          std::fabs(feasible.tau_hat - oracle.tau_hat);
            } catch (const DegenerateError&) {
                failed[r] = 1;
            }
        }, threads);
        std::vector<double> kept;
        int n_fail = 0;
        for (std::size_t r = 0; r < gaps.size(); ++r) {
            if (failed[r]) {
                n_fail += 1;
                continue;
            }
            kept.push_back(gaps[r]);
            rep.rows.push_back({static_cast<double>(n), static_cast<double>(r), gaps[r]});
        }
        if (kept.empty()) throw DegenerateError("experiment_oracle_gap: all replications degenerate at n=" + std::to_string(n));
        medians.push_back(detail::median_of(kept));
        rep.metrics.emplace_back("median_gap_n" + std::to_string(n), medians.back());
        rep.metrics.emplace_back("p90_gap_n" + std::to_string(n), detail::quantile_of(kept, 0.9));
        if (n_fail > 0)
            rep.notes.push_back(std::to_string(n_fail) + " degenerate replications at n=" + std::to_string(n));
    }
    bool monotone = true;
    for (std::size_t i = 1; i < medians.size(); ++i)
        if (medians[i] > medians[i - 1]) monotone = false;
    rep.metrics.emplace_back("median_monotone_nonincreasing", monotone ? 1.0 : 0.0);
    rep.pass = monotone;
    rep.runtime_seconds = timer.seconds();
    return rep;
}

}  // namespace schoolrd
