#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "schoolrd/dgp.hpp"
#include "schoolrd/eligibility.hpp"
#include "schoolrd/error.hpp"
#include "schoolrd/market.hpp"
#include "schoolrd/region.hpp"
#include "schoolrd/rng.hpp"

namespace schoolrd {

// One piece of a banded partition of [0,1]: either an interior stretch or a
// small band of width 2h centered at a cutoff.
struct ScorePiece {
    Interval iv;
    bool band = false;
    double center = 0.0;
    std::string label;
};

// Partition of one test's score axis into interior regions and cutoff bands.
// Bands must be disjoint and interior, which requires h below half the
// smallest cutoff gap.
struct BandPartition {
    int test = 1;
    std::vector<double> cutpoints;
    double bandwidth = 0.0;
    std::vector<ScorePiece> pieces;

    static std::string roman(std::size_t k) {
        static const char* names[] = {"I", "II", "III", "IV", "V", "VI", "VII", "VIII", "IX", "X"};
        return k < 10 ? names[k] : "R" + std::to_string(k + 1);
    }

    static BandPartition build(int test, std::vector<double> cutpoints, double h) {
        if (!(h > 0.0)) throw ConfigError("band partition: bandwidth must be positive");
        std::sort(cutpoints.begin(), cutpoints.end());
        BandPartition bp;
        bp.test = test;
        bp.cutpoints = cutpoints;
        bp.bandwidth = h;
        double prev_end = 0.0;
        bool prev_end_closed = true;
        std::size_t label_idx = 0;
        for (std::size_t k = 0; k < cutpoints.size(); ++k) {
            const double x = cutpoints[k];
            if (!(x - h > prev_end))
                throw ConfigError("band partition: bands overlap or touch the boundary; shrink h");
            bp.pieces.push_back({Interval::make(prev_end, x - h, prev_end_closed, false), false, 0.0,
                                 roman(label_idx++)});
            bp.pieces.push_back({Interval::closed(x - h, x + h), true, x, roman(label_idx++)});
            prev_end = x + h;
            prev_end_closed = false;
            if (!(x + h < 1.0)) throw ConfigError("band partition: band exceeds the unit interval");
        }
        bp.pieces.push_back({Interval::make(prev_end, 1.0, prev_end_closed, true), false, 0.0,
                             roman(label_idx++)});
        return bp;
    }

    const ScorePiece& piece(const std::string& label) const {
        for (const auto& p : pieces)
            if (p.label == label) return p;
        throw ConfigError("band partition: no region labeled " + label);
    }
};

namespace detail {

// Deterministic qualification of a test school against a score piece. The
// piece must not straddle the school's score-space cutoff.
inline bool test_qualifies(const ScorePiece& piece, double threshold, bool coin_right) {
    if (piece.band) {
        if (threshold == piece.center) return coin_right;
        if (threshold > piece.iv.lower && threshold < piece.iv.upper && threshold != piece.center)
            throw ConfigError("score region straddles a cutoff not at its center; rebuild the partition with this type's cutoffs");
        return piece.center >= threshold;
    }
    if (threshold > piece.iv.lower && threshold < piece.iv.upper)
        throw ConfigError("interior score region straddles a school cutoff; rebuild the partition with this type's cutoffs");
    // Off the open straddle cases the whole piece sits on one side.
    return piece.iv.lower >= threshold;
}

}  // namespace detail

// Local assignment probability into `treated` for a type whose test scores
// are known only up to a region: scores in a band count as a fair coin per
// side of that band's cutoff, interior scores are deterministic, and lottery
// qualification integrates exactly over independent uniform draws (shared
// lottery indices handled by per-draw interval intersection). Tests are
// treated independently: the coin applies only to the banded test.
inline double local_propensity(const MarketSpec& market, const TypeView& type,
                               const std::vector<ScorePiece>& region_per_test,
                               const std::vector<int>& treated, const CutoffVector& c,
                               const std::map<int, double>* win_prob_override = nullptr) {
    if (static_cast<int>(region_per_test.size()) != market.num_tests)
        throw ConfigError("local_propensity: one score region per test required");
    std::vector<char> is_treated(static_cast<std::size_t>(market.num_schools()), 0);
    for (int s : treated) is_treated.at(static_cast<std::size_t>(s)) = 1;

    std::vector<std::size_t> banded;
    for (std::size_t t = 0; t < region_per_test.size(); ++t)
        if (region_per_test[t].band) banded.push_back(t);
    if (banded.size() > 20) throw ConfigError("local_propensity: too many banded tests");

    const auto threshold_at = [&](const SchoolSpec& sp) {
        if (win_prob_override && sp.is_lottery()) {
            const auto it = win_prob_override->find(sp.id);
            if (it != win_prob_override->end()) return 1.0 - it->second;
        }
        return clear_threshold(sp, type.qualifier_at(sp.id), c.at(sp.id));
    };

    double psi = 0.0;
    const std::size_t outcomes = std::size_t{1} << banded.size();
    for (std::size_t mask = 0; mask < outcomes; ++mask) {
        std::vector<char> coin_right(region_per_test.size(), 0);
        for (std::size_t b = 0; b < banded.size(); ++b)
            coin_right[banded[b]] = (mask >> b) & 1u;
        // Survivor set per lottery: draws under which every lottery school
        // passed so far was lost; always of the form [0, m).
        std::vector<double> survive(static_cast<std::size_t>(market.num_lotteries), 1.0);
        double assigned_treated = 0.0;
        for (const int s : type.preferences) {
            const SchoolSpec& sp = market.school(s);
            if (sp.is_test()) {
                const std::size_t t = static_cast<std::size_t>(sp.index - 1);
                if (!detail::test_qualifies(region_per_test[t], threshold_at(sp), coin_right[t]))
                    continue;
                if (is_treated[static_cast<std::size_t>(s)]) {
                    double reach = 1.0;
                    for (double m : survive) reach *= m;
                    assigned_treated += reach;
                }
                break;  // qualified: assigned here on every surviving draw
            }
            const std::size_t l = static_cast<std::size_t>(sp.index - 1);
            const double theta = threshold_at(sp);
            const double win_len = std::max(0.0, survive[l] - theta);
            if (win_len > 0.0 && is_treated[static_cast<std::size_t>(s)]) {
                double reach = win_len;
                for (std::size_t k = 0; k < survive.size(); ++k)
                    if (k != l) reach *= survive[k];
                assigned_treated += reach;
            }
            survive[l] = std::min(survive[l], theta);
            if (survive[l] <= 0.0) break;  // no surviving draw reaches further
        }
        psi += assigned_treated;
    }
    return psi / static_cast<double>(outcomes);
}

// Monte Carlo variant for correlated lottery laws; positivity and levels from
// sampled draws (seeded, 1e5 draws by default).
inline double local_propensity_mc(const MarketSpec& market, const TypeView& type,
                                  const std::vector<ScorePiece>& region_per_test,
                                  const std::vector<int>& treated, const CutoffVector& c,
                                  const DgpSpec& dgp, std::uint64_t seed,
                                  std::size_t draws = 100000) {
    std::vector<char> is_treated(static_cast<std::size_t>(market.num_schools()), 0);
    for (int s : treated) is_treated.at(static_cast<std::size_t>(s)) = 1;
    std::vector<std::size_t> banded;
    for (std::size_t t = 0; t < region_per_test.size(); ++t)
        if (region_per_test[t].band) banded.push_back(t);
    Rng rng(seed);
    double hits = 0.0;
    for (std::size_t d = 0; d < draws; ++d) {
        const std::vector<double> u = detail::draw_lotteries(dgp, rng);
        for (std::size_t mask = 0; mask < (std::size_t{1} << banded.size()); ++mask) {
            std::vector<char> coin_right(region_per_test.size(), 0);
            for (std::size_t b = 0; b < banded.size(); ++b)
                coin_right[banded[b]] = (mask >> b) & 1u;
            for (const int s : type.preferences) {
                const SchoolSpec& sp = market.school(s);
                bool qualifies;
                if (sp.is_test()) {
                    const std::size_t t = static_cast<std::size_t>(sp.index - 1);
                    qualifies = detail::test_qualifies(
                        region_per_test[t], clear_threshold(sp, type.qualifier_at(s), c.at(s)),
                        coin_right[t]);
                } else {
                    qualifies = u[static_cast<std::size_t>(sp.index - 1)] >=
                                clear_threshold(sp, type.qualifier_at(s), c.at(s));
                }
                if (qualifies) {
                    if (is_treated[static_cast<std::size_t>(s)])
                        hits += 1.0 / static_cast<double>(std::size_t{1} << banded.size());
                    break;
                }
            }
        }
    }
    return hits / static_cast<double>(draws);
}

// tau = E[(D - psi) Y] / E[(D - psi)^2], the coefficient of the centered
// treatment in the propensity regression.
inline double propensity_regression_estimand(const std::vector<double>& y,
                                             const std::vector<double>& d,
                                             const std::vector<double>& psi) {
    if (y.size() != d.size() || y.size() != psi.size())
        throw ConfigError("propensity_regression_estimand: length mismatch");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double x = d[i] - psi[i];
        num += x * y[i];
        den += x * x;
    }
    if (!(den > 0.0)) throw DegenerateError("propensity regression: zero variance in D - psi");
    return num / den;
}

struct PropensityCell {
    std::string type_label;
    std::string region_label;
    bool band = false;
    double mass = 0.0;    // P(v)
    double psi = 0.0;     // local propensity
    double effect = 0.0;  // E[Y_T - Y_C | v]
};

struct WeightDecomposition {
    std::vector<double> weights;  // normalized, aligned with the input cells
    double implied_tau = 0.0;
    double band_weight_share = 0.0;
};

// Implicit cell weights of the propensity regression: w(v) proportional to
// P(v) psi(v) (1 - psi(v)). Also reports the share landing on band cells.
inline WeightDecomposition weight_decomposition(const std::vector<PropensityCell>& cells) {
    double mass = 0.0;
    for (const auto& cell : cells) mass += cell.mass;
    if (std::fabs(mass - 1.0) > 1e-9) throw ConfigError("weight_decomposition: cell masses must sum to 1");
    WeightDecomposition out;
    out.weights.resize(cells.size(), 0.0);
    double total = 0.0;
    for (const auto& cell : cells) total += cell.mass * cell.psi * (1.0 - cell.psi);
    if (!(total > 0.0)) throw DegenerateError("weight_decomposition: every cell has degenerate propensity");
    for (std::size_t k = 0; k < cells.size(); ++k) {
        out.weights[k] = cells[k].mass * cells[k].psi * (1.0 - cells[k].psi) / total;
        out.implied_tau += out.weights[k] * cells[k].effect;
        if (cells[k].band) out.band_weight_share += out.weights[k];
    }
    return out;
}

// Cells of (type x partition piece) for a synthetic population: masses from
// the type shares and score CDFs, psi from local_propensity, effects from the
// treated/control outcome-mean gap averaged over the piece.
inline std::vector<PropensityCell> propensity_cells(const DgpSpec& dgp, const BandPartition& bp,
                                                    const std::vector<int>& treated,
                                                    const CutoffVector& c,
                                                    const std::map<int, double>* win_override = nullptr) {
    for (const auto& sp : dgp.market.schools)
        if (sp.is_test() && sp.index != bp.test)
            throw ConfigError("propensity_cells: every test-score school must use the partitioned test");
    std::vector<char> is_treated(static_cast<std::size_t>(dgp.market.num_schools()), 0);
    for (int s : treated) is_treated.at(static_cast<std::size_t>(s)) = 1;
    std::vector<PropensityCell> cells;
    for (const auto& ty : dgp.types) {
        const TypeView view{ty.preferences, ty.qualifiers};
        const auto& density = ty.score_density.at(static_cast<std::size_t>(bp.test - 1));
        for (const auto& piece : bp.pieces) {
            PropensityCell cell;
            cell.type_label = ty.label;
            cell.region_label = piece.label;
            cell.band = piece.band;
            cell.mass = ty.share * (density.cdf(piece.iv.upper) - density.cdf(piece.iv.lower));
            std::vector<ScorePiece> region(static_cast<std::size_t>(dgp.market.num_tests), piece);
            cell.psi = local_propensity(dgp.market, view, region, treated, c, win_override);
            // Piece-average treated-minus-control mean gap, density weighted.
            // Uses the first treated and first control school on the type's
            // list; the shipped setups give every school in a condition the
            // same mean, so the choice does not matter.
            if (cell.mass > 0.0) {
                double gap = 0.0;
                const double piece_mass = density.cdf(piece.iv.upper) - density.cdf(piece.iv.lower);
                const auto piece_avg = [&](const OutcomeMean& mu) {
                    double v = mu.c0 * piece_mass;
                    const auto& p = mu.per_test.at(static_cast<std::size_t>(bp.test - 1));
                    v += p[0] * density.partial_moment(1, piece.iv.lower, piece.iv.upper);
                    v += p[1] * density.partial_moment(2, piece.iv.lower, piece.iv.upper);
                    v += p[2] * density.partial_moment(3, piece.iv.lower, piece.iv.upper);
                    return v / piece_mass;
                };
                int t_school = -1, c_school = -1;
                for (int s : ty.preferences) {
                    if (is_treated[static_cast<std::size_t>(s)] && t_school < 0) t_school = s;
                    if (!is_treated[static_cast<std::size_t>(s)] && c_school < 0) c_school = s;
                }
                if (t_school >= 0 && c_school >= 0)
                    gap = piece_avg(ty.outcome_mean[static_cast<std::size_t>(t_school)]) -
                          piece_avg(ty.outcome_mean[static_cast<std::size_t>(c_school)]);
                cell.effect = gap;
            }
            cells.push_back(std::move(cell));
        }
    }
    return cells;
}

}  // namespace schoolrd
