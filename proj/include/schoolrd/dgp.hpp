#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "schoolrd/eligibility.hpp"
#include "schoolrd/error.hpp"
#include "schoolrd/market.hpp"
#include "schoolrd/rng.hpp"

namespace schoolrd {

// Continuous score densities on [0,1]. Both families are positive, bounded,
// and smooth, so the bounded-density and differentiable-density requirements
// hold by construction.
struct ScoreDensity {
    enum class Family { Uniform, SinSquared } family = Family::Uniform;
    // SinSquared: f(r) = (1 + a sin^2(m pi r)) / (1 + a/2), a > -2 .. bounded
    double amplitude = 0.0;
    int lobes = 1;

    static ScoreDensity uniform() { return ScoreDensity{}; }
    static ScoreDensity sin_squared(double a, int m) {
        if (!(a > -2.0) || m < 1) throw ConfigError("sin_squared density: need amplitude > -2 and lobes >= 1");
        return ScoreDensity{Family::SinSquared, a, m};
    }

    double pdf(double r) const {
        switch (family) {
            case Family::Uniform: return 1.0;
            case Family::SinSquared: {
                const double s = std::sin(lobes * M_PI * r);
                return (1.0 + amplitude * s * s) / (1.0 + amplitude / 2.0);
            }
        }
        return 1.0;
    }

    double cdf(double r) const {
        r = std::min(1.0, std::max(0.0, r));
        switch (family) {
            case Family::Uniform: return r;
            case Family::SinSquared: {
                const double norm = 1.0 + amplitude / 2.0;
                const double two_m_pi = 2.0 * lobes * M_PI;
                return (r * norm - amplitude * std::sin(two_m_pi * r) / (2.0 * two_m_pi)) / norm;
            }
        }
        return r;
    }

    double min_pdf() const {
        if (family == Family::Uniform) return 1.0;
        return (amplitude >= 0.0 ? 1.0 : 1.0 + amplitude) / (1.0 + amplitude / 2.0);
    }
    double max_pdf() const {
        if (family == Family::Uniform) return 1.0;
        return (amplitude >= 0.0 ? 1.0 + amplitude : 1.0) / (1.0 + amplitude / 2.0);
    }

    // Inverse CDF by bisection; the CDF is strictly increasing (min_pdf > 0).
    double quantile(double u) const {
        if (family == Family::Uniform) return u;
        double lo = 0.0, hi = 1.0;
        for (int it = 0; it < 60; ++it) {
            const double mid = 0.5 * (lo + hi);
            (cdf(mid) < u ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    }

    double sample(Rng& rng) const { return quantile(rng.uniform01()); }

    // int_a^b r^k f(r) dr, k <= 3. Uniform has closed forms; SinSquared uses
    // composite Simpson, converged far below the Monte Carlo tolerances that
    // consume it.
    double partial_moment(int k, double a, double b) const {
        if (b < a) return 0.0;
        if (family == Family::Uniform)
            return (std::pow(b, k + 1) - std::pow(a, k + 1)) / static_cast<double>(k + 1);
        const int n = 1 << 12;  // panels
        const double h = (b - a) / n;
        double s = std::pow(a, k) * pdf(a) + std::pow(b, k) * pdf(b);
        for (int i = 1; i < n; ++i) {
            const double x = a + i * h;
            s += std::pow(x, k) * pdf(x) * (i % 2 ? 4.0 : 2.0);
        }
        return s * h / 3.0;
    }
};

// Potential-outcome mean for one (type, school): cubic polynomial, additive
// across test scores. mu(R) = c0 + sum_t (c1 R_t + c2 R_t^2 + c3 R_t^3).
struct OutcomeMean {
    double c0 = 0.0;
    std::vector<std::array<double, 3>> per_test;  // (c1, c2, c3) per test

    double eval(const std::vector<double>& scores) const {
        double y = c0;
        for (std::size_t t = 0; t < per_test.size() && t < scores.size(); ++t) {
            const double r = scores[t];
            const auto& p = per_test[t];
            y += r * (p[0] + r * (p[1] + r * p[2]));
        }
        return y;
    }
    double eval1(double r, int test) const {  // single-test contribution + intercept
        const auto& p = per_test.at(static_cast<std::size_t>(test - 1));
        return c0 + r * (p[0] + r * (p[1] + r * p[2]));
    }
    bool depends_only_on(int test) const {
        for (std::size_t t = 0; t < per_test.size(); ++t) {
            if (static_cast<int>(t) == test - 1) continue;
            if (per_test[t][0] != 0.0 || per_test[t][1] != 0.0 || per_test[t][2] != 0.0) return false;
        }
        return true;
    }
};

struct NoiseLaw {
    enum class Kind { Gaussian, ParetoCentered } kind = Kind::Gaussian;
    double sigma = 1.0;   // Gaussian sd
    double alpha = 2.5;   // Pareto tail index (finite 2+eps moment for eps < alpha-2)
    double scale = 1.0;   // Pareto scale

    static NoiseLaw gaussian(double sd) { return NoiseLaw{Kind::Gaussian, sd, 2.5, 1.0}; }
    static NoiseLaw pareto(double alpha_, double scale_) {
        if (!(alpha_ > 2.0)) throw ConfigError("pareto noise: need alpha > 2 for finite variance");
        return NoiseLaw{Kind::ParetoCentered, 0.0, alpha_, scale_};
    }

    double sample(Rng& rng) const {
        if (kind == Kind::Gaussian) return rng.normal(0.0, sigma);
        double u = rng.uniform01();
        while (u <= 0.0) u = rng.uniform01();
        const double x = scale * std::pow(u, -1.0 / alpha);
        return x - scale * alpha / (alpha - 1.0);  // centered
    }
    double variance() const {
        if (kind == Kind::Gaussian) return sigma * sigma;
        const double m1 = scale * alpha / (alpha - 1.0);
        const double m2 = scale * scale * alpha / (alpha - 2.0);
        return m2 - m1 * m1;
    }
};

struct StudentType {
    std::string label;
    double share = 0.0;
    std::vector<int> preferences;          // ends with school 0
    std::vector<int> qualifiers;           // per school id
    std::vector<ScoreDensity> score_density;  // per test
    std::vector<OutcomeMean> outcome_mean;    // per school id
    NoiseLaw noise = NoiseLaw::gaussian(1.0);
};

struct LotteryLaw {
    enum class Kind { IndependentUniform, GaussianCopula } kind = Kind::IndependentUniform;
    double rho = 0.0;  // exchangeable copula correlation

    bool independent() const { return kind == Kind::IndependentUniform || rho == 0.0; }
};

// Synthetic superpopulation: market + type mixture + score/outcome/lottery
// laws. Students are i.i.d. draws.
struct DgpSpec {
    MarketSpec market;
    std::vector<StudentType> types;
    LotteryLaw lottery_law;
    // Analytic market-clearing cutoffs when known by calibration; experiments
    // use these as the population values (the continuum solver cross-checks).
    std::optional<CutoffVector> known_cutoffs;

    void validate() const {
        market.validate();
        if (types.empty()) throw ConfigError("dgp: no student types");
        double total = 0.0;
        for (const auto& ty : types) {
            if (!(ty.share > 0.0)) throw ConfigError("dgp: type shares must be positive");
            total += ty.share;
            if (ty.preferences.empty() || ty.preferences.back() != kOutsideSchool)
                throw ConfigError("dgp: type preference list must end in school 0");
            if (static_cast<int>(ty.score_density.size()) != market.num_tests)
                throw ConfigError("dgp: one score density per test required");
            if (static_cast<int>(ty.outcome_mean.size()) != market.num_schools())
                throw ConfigError("dgp: one outcome mean per school required");
            if (static_cast<int>(ty.qualifiers.size()) != market.num_schools())
                throw ConfigError("dgp: one qualifier per school required");
        }
        if (std::fabs(total - 1.0) > 1e-9) throw ConfigError("dgp: type shares must sum to 1");
        if (known_cutoffs) known_cutoffs->validate(market);
    }
};

struct Population {
    std::vector<StudentProfile> students;
    std::vector<int> type_index;
    // potential[i][s]: outcome of student i if assigned school s. Test-only
    // oracle data; estimators receive observed slices, never this matrix.
    std::vector<std::vector<double>> potential;
};

namespace detail {

inline int draw_type(const DgpSpec& dgp, Rng& rng) {
    double u = rng.uniform01();
    for (std::size_t k = 0; k < dgp.types.size(); ++k) {
        u -= dgp.types[k].share;
        if (u < 0.0) return static_cast<int>(k);
    }
    return static_cast<int>(dgp.types.size()) - 1;
}

inline std::vector<double> draw_lotteries(const DgpSpec& dgp, Rng& rng) {
    const int L = dgp.market.num_lotteries;
    std::vector<double> u(static_cast<std::size_t>(L));
    if (dgp.lottery_law.independent()) {
        for (auto& v : u) v = rng.uniform01();
        return u;
    }
    // Exchangeable Gaussian copula: Z_l = sqrt(rho) W + sqrt(1-rho) E_l,
    // mapped back through the normal CDF. Marginals stay Unif[0,1].
    const double rho = dgp.lottery_law.rho;
    const double w = rng.normal();
    for (auto& v : u) {
        const double z = std::sqrt(rho) * w + std::sqrt(1.0 - rho) * rng.normal();
        v = 0.5 * std::erfc(-z * M_SQRT1_2);
    }
    return u;
}

}  // namespace detail

// Students only (no potential outcomes); the continuum-cutoff solver uses
// this lighter path.
inline std::vector<StudentProfile> generate_students(const DgpSpec& dgp, std::size_t n,
                                                     std::uint64_t seed,
                                                     std::vector<int>* type_out = nullptr) {
    dgp.validate();
    Rng rng(seed);
    std::vector<StudentProfile> students;
    students.reserve(n);
    if (type_out) {
        type_out->clear();
        type_out->reserve(n);
    }
    for (std::size_t i = 0; i < n; ++i) {
        const int k = detail::draw_type(dgp, rng);
        const StudentType& ty = dgp.types[static_cast<std::size_t>(k)];
        StudentProfile st;
        st.preferences = ty.preferences;
        st.qualifiers = ty.qualifiers;
        st.scores.resize(static_cast<std::size_t>(dgp.market.num_tests));
        for (int t = 0; t < dgp.market.num_tests; ++t)
            st.scores[static_cast<std::size_t>(t)] = ty.score_density[static_cast<std::size_t>(t)].sample(rng);
        st.lottery_draws = detail::draw_lotteries(dgp, rng);
        students.push_back(std::move(st));
        if (type_out) type_out->push_back(k);
    }
    return students;
}

// Students plus stored potential outcomes for every school, deterministic per
// seed.
inline Population generate_population(const DgpSpec& dgp, std::size_t n, std::uint64_t seed) {
    Population pop;
    pop.students = generate_students(dgp, n, seed, &pop.type_index);
    // Outcome noise comes from an independent stream so roster draws match
    // generate_students bit for bit.
    Rng rng(splitmix64(seed ^ 0x07c03e11da7a5eedULL));
    pop.potential.resize(n);
    const int M = dgp.market.num_schools();
    for (std::size_t i = 0; i < n; ++i) {
        const StudentType& ty = dgp.types[static_cast<std::size_t>(pop.type_index[i])];
        auto& row = pop.potential[i];
        row.resize(static_cast<std::size_t>(M));
        for (int s = 0; s < M; ++s)
            row[static_cast<std::size_t>(s)] =
                ty.outcome_mean[static_cast<std::size_t>(s)].eval(pop.students[i].scores) + ty.noise.sample(rng);
    }
    return pop;
}

}  // namespace schoolrd
