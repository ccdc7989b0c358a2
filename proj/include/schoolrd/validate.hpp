#pragma once

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "schoolrd/dgp.hpp"
#include "schoolrd/eligibility.hpp"
#include "schoolrd/error.hpp"
#include "schoolrd/market.hpp"
#include "schoolrd/matching.hpp"

namespace schoolrd {

enum class CheckStatus { Satisfied, Violated, Unverifiable };

inline const char* to_string(CheckStatus s) {
    switch (s) {
        case CheckStatus::Satisfied: return "satisfied";
        case CheckStatus::Violated: return "violated";
        case CheckStatus::Unverifiable: return "unverifiable";
    }
    return "?";
}

struct AssumptionCheck {
    std::string label;
    CheckStatus status = CheckStatus::Unverifiable;
    std::string detail;
};

struct ValidationReport {
    std::vector<AssumptionCheck> checks;
    CutoffVector cutoffs_used;
    bool any_violation() const {
        for (const auto& c : checks)
            if (c.status == CheckStatus::Violated) return true;
        return false;
    }
};

struct ValidateOptions {
    std::size_t reference_n = 50000;
    int seeds = 5;
    std::uint64_t seed = 20240501;
    double tolerance = 0.02;  // cross-seed cutoff agreement
    int threads = 0;
};

// Report-only audit of a synthetic market + DGP against the regularity
// conditions the estimators rely on: interior cutoffs off the qualifier grid,
// distinct same-test cutoffs, eventually-undersubscribed zero-cutoff schools,
// bounded score densities, outcome moment bounds, smooth means, and a smooth
// positive running-score density.
inline ValidationReport validate_market(const MarketSpec& market, const DgpSpec& dgp,
                                        const ValidateOptions& opt = {}) {
    market.validate();
    dgp.validate();
    ValidationReport report;
    const auto add = [&](std::string label, CheckStatus st, std::string detail) {
        report.checks.push_back({std::move(label), st, std::move(detail)});
    };
    const auto fmt = [](double v) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.6g", v);
        return std::string(buf);
    };

    // Cross-seed cutoff estimates drive the cutoff-location checks.
    std::vector<CutoffVector> per_seed(static_cast<std::size_t>(opt.seeds));
    parallel_for(per_seed.size(), [&](std::size_t k) {
        const auto students = generate_students(dgp, opt.reference_n, derive_seed(opt.seed, k));
        per_seed[k] = run_da(market, students).cutoffs;
    }, opt.threads);
    const int M = market.num_schools();
    CutoffVector c;
    c.values.assign(static_cast<std::size_t>(M), 0.0);
    double spread = 0.0;
    for (int s = 0; s < M; ++s) {
        double lo = 2.0, hi = -1.0, mean = 0.0;
        for (const auto& e : per_seed) {
            lo = std::min(lo, e.at(s));
            hi = std::max(hi, e.at(s));
            mean += e.at(s);
        }
        c.values[static_cast<std::size_t>(s)] = mean / static_cast<double>(per_seed.size());
        spread = std::max(spread, hi - lo);
    }
    if (dgp.known_cutoffs) {
        double drift = 0.0;
        for (int s = 0; s < M; ++s)
            drift = std::max(drift, std::fabs(c.at(s) - dgp.known_cutoffs->at(s)));
        if (drift > opt.tolerance)
            add("cutoff-concentration", CheckStatus::Violated,
                "declared cutoffs are " + fmt(drift) + " away from the sampled ones at n=" +
                    std::to_string(opt.reference_n));
        else
            add("cutoff-concentration", CheckStatus::Satisfied,
                "sampled cutoffs agree with the declared values within " + fmt(drift));
        c = *dgp.known_cutoffs;
    } else {
        add("cutoff-concentration",
            spread < opt.tolerance ? CheckStatus::Satisfied : CheckStatus::Unverifiable,
            "max cross-seed spread " + fmt(spread) + " at n=" + std::to_string(opt.reference_n));
    }
    report.cutoffs_used = c;
    const double margin = std::max(1e-9, 2.0 * spread);

    // Interior score-space cutoffs; a cutoff pinned at 1 marks a school with
    // no effective seats.
    {
        CheckStatus st = CheckStatus::Satisfied;
        std::string detail;
        for (const auto& sp : market.schools) {
            if (sp.id == kOutsideSchool) continue;
            if (std::fabs(c.at(sp.id) - 1.0) < margin) {
                st = CheckStatus::Violated;
                detail += "school " + std::to_string(sp.id) + ": cutoff-at-1 (degenerate, no seats); ";
                continue;
            }
            if (!sp.is_test()) continue;
            const double r = school_test_cutoff(sp, c);
            detail += "school " + std::to_string(sp.id) + ": r=" + fmt(r) + "; ";
            if (c.at(sp.id) > margin && (r <= 0.0 || r >= 1.0)) st = CheckStatus::Violated;
        }
        add("interior-cutoffs", st, detail);
    }

    // Cutoffs must avoid the qualifier grid {q/(qbar+1)} and 1.
    {
        CheckStatus st = CheckStatus::Satisfied;
        std::string detail;
        for (const auto& sp : market.schools) {
            if (sp.id == kOutsideSchool) continue;
            const double cs = c.at(sp.id);
            for (int q = 1; q <= sp.qualifier_max + 1; ++q) {
                const double grid = static_cast<double>(q) / (static_cast<double>(sp.qualifier_max) + 1.0);
                if (std::fabs(cs - grid) < margin) {
                    st = CheckStatus::Violated;
                    detail += "school " + std::to_string(sp.id) + ": cutoff " + fmt(cs) +
                              " sits on the qualifier grid point " + fmt(grid) + "; ";
                }
            }
        }
        add("cutoffs-off-qualifier-grid", st, detail.empty() ? "all cutoffs clear of the grid" : detail);
    }

    // Same-test schools need distinct score-space cutoffs unless both are
    // undersubscribed.
    {
        CheckStatus st = CheckStatus::Satisfied;
        std::string detail = "no same-test collisions";
        for (const auto& a : market.schools) {
            if (!a.is_test()) continue;
            for (const auto& b : market.schools) {
                if (!b.is_test() || b.id <= a.id || b.index != a.index) continue;
                const double ra = school_test_cutoff(a, c), rb = school_test_cutoff(b, c);
                const bool both_zero = c.at(a.id) < margin && c.at(b.id) < margin;
                if (!both_zero && std::fabs(ra - rb) < margin) {
                    st = CheckStatus::Violated;
                    detail = "schools " + std::to_string(a.id) + " and " + std::to_string(b.id) +
                             " share test " + std::to_string(a.index) + " with equal cutoffs " + fmt(ra);
                }
            }
        }
        add("distinct-same-test-cutoffs", st, detail);
    }

    // Zero-cutoff schools should be at zero in (nearly) every sample.
    {
        CheckStatus st = CheckStatus::Satisfied;
        std::string detail;
        for (const auto& sp : market.schools) {
            if (sp.id == kOutsideSchool || !(c.at(sp.id) < margin)) continue;
            int zero = 0;
            for (const auto& e : per_seed)
                if (e.at(sp.id) == 0.0) zero += 1;
            const double freq = static_cast<double>(zero) / static_cast<double>(per_seed.size());
            detail += "school " + std::to_string(sp.id) + ": P(sample cutoff = 0) ~ " + fmt(freq) + "; ";
            if (freq == 0.0) st = CheckStatus::Violated;
            else if (freq < 1.0 && st == CheckStatus::Satisfied) st = CheckStatus::Unverifiable;
        }
        add("eventually-undersubscribed", st,
            detail.empty() ? "no zero-cutoff school other than the outside option" : detail);
    }

    // Score densities: positive and bounded by family construction.
    {
        CheckStatus st = CheckStatus::Satisfied;
        std::string detail;
        for (const auto& ty : dgp.types)
            for (std::size_t t = 0; t < ty.score_density.size(); ++t) {
                const auto& d = ty.score_density[t];
                if (!(d.min_pdf() > 0.0)) st = CheckStatus::Violated;
                detail += ty.label + "/t" + std::to_string(t + 1) + ": pdf in [" + fmt(d.min_pdf()) +
                          ", " + fmt(d.max_pdf()) + "]; ";
            }
        if (!dgp.lottery_law.independent()) {
            st = st == CheckStatus::Violated ? st : CheckStatus::Unverifiable;
            detail += "correlated lottery law: joint density bounds not certified; ";
        }
        add("bounded-densities", st, detail);
    }

    // Outcome noise: finite 2+eps moments and positive variance.
    {
        CheckStatus st = CheckStatus::Satisfied;
        std::string detail;
        for (const auto& ty : dgp.types) {
            if (ty.noise.kind == NoiseLaw::Kind::Gaussian) {
                detail += ty.label + ": gaussian sd " + fmt(ty.noise.sigma) + "; ";
                if (!(ty.noise.sigma > 0.0)) {
                    st = CheckStatus::Violated;
                    detail += "(zero outcome variance) ";
                }
            } else {
                detail += ty.label + ": pareto tail " + fmt(ty.noise.alpha) + " (2+eps moment for eps<" +
                          fmt(ty.noise.alpha - 2.0) + "); ";
            }
        }
        add("moment-bounds", st, detail);
    }

    add("smooth-mean", CheckStatus::Satisfied,
        "polynomial outcome means are smooth with bounded third derivative on [0,1]");

    // Running-score density: smooth and positive at each interior test cutoff.
    {
        CheckStatus st = CheckStatus::Satisfied;
        std::string detail;
        for (const auto& sp : market.schools) {
            if (!sp.is_test()) continue;
            const double r = school_test_cutoff(sp, c);
            if (!(r > 0.0 && r < 1.0)) continue;
            double min_f = 1e300;
            for (const auto& ty : dgp.types)
                min_f = std::min(min_f, ty.score_density[static_cast<std::size_t>(sp.index - 1)].pdf(r));
            detail += "school " + std::to_string(sp.id) + ": min type pdf at cutoff " + fmt(min_f) + "; ";
            if (!(min_f > 0.0)) st = CheckStatus::Violated;
        }
        add("smooth-positive-running-density", st,
            detail.empty() ? "no interior test cutoffs" : detail);
    }

    return report;
}

}  // namespace schoolrd
