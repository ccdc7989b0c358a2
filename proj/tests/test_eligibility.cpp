#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "schoolrd/demo.hpp"
#include "schoolrd/eligibility.hpp"
#include "schoolrd/matching.hpp"

using namespace schoolrd;

namespace {

const double kThird = 1.0 / 3.0;
const double kTwoThirds = 2.0 / 3.0;

Region region1(Interval iv) {
    Region r(1);
    r.per_test[0] = iv;
    return r;
}

}  // namespace

TEST_CASE("score-space cutoff translation per qualifier level") {
    SchoolSpec sp{1, 0.5, SchoolKind::TestScore, 1, 2};
    CHECK(score_cutoff(sp, 0, 0.5) == 1.0);
    CHECK(score_cutoff(sp, 1, 0.5) == 0.5);
    CHECK(score_cutoff(sp, 2, 0.5) == 0.0);
    SchoolSpec lot{1, 0.5, SchoolKind::Lottery, 1, 2};
    CHECK_THROWS_AS(score_cutoff(lot, 0, 0.5), ConfigError);
}

TEST_CASE("school-level test cutoff picks the interior level") {
    SchoolSpec sp{1, 0.5, SchoolKind::TestScore, 1, 2};
    CutoffVector c{{0.0, 0.5}};
    CHECK(school_test_cutoff(sp, CutoffVector{{0.0, 0.5}}) == 0.5);
    SchoolSpec flat{1, 0.5, SchoolKind::TestScore, 1, 0};
    CHECK(school_test_cutoff(flat, CutoffVector{{0.0, kThird}}) == kThird);
    CHECK(school_test_cutoff(flat, CutoffVector{{0.0, 0.0}}) == 0.0);
}

TEST_CASE("most lenient preferred cutoff per test") {
    const MarketSpec m = demo::market();
    const CutoffVector c = demo::cutoffs();
    const auto census = demo::census();
    // Type A at the low test school: the top test school binds at 2/3.
    const LenientCutoff a1 = lenient_cutoff(m, type_view(census[0]), c, 1, 1);
    CHECK_FALSE(a1.vacuous);
    CHECK(a1.value == kTwoThirds);
    // Type B at the lottery school: both test schools precede it; min is 1/3.
    const LenientCutoff b3 = lenient_cutoff(m, type_view(census[1]), c, 3, 1);
    CHECK_FALSE(b3.vacuous);
    CHECK(b3.value == kThird);
    // Type C at the lottery school: nothing preferred; vacuous constraint.
    const LenientCutoff c3 = lenient_cutoff(m, type_view(census[2]), c, 3, 1);
    CHECK(c3.vacuous);
    CHECK(c3.value == 1.0);
}

TEST_CASE("sure-win set membership") {
    const MarketSpec m = demo::market();
    const auto census = demo::census();
    const auto wins = sure_win_set(m, type_view(census[0]), demo::cutoffs());
    CHECK(wins == std::vector<int>{0});  // the undersubscribed outside option only

    SECTION("a top qualifier can make an oversubscribed school sure-win") {
        MarketSpec m2 = m;
        m2.schools[3].qualifier_max = 1;
        StudentProfile st = census[0];
        st.qualifiers = {0, 0, 0, 1};
        // threshold (1+1)*0.5 - 1 = 0: every draw clears
        const auto w2 = sure_win_set(m2, type_view(st), demo::cutoffs());
        CHECK(w2 == std::vector<int>{0, 3});
    }
}

TEST_CASE("favorite-lottery positivity via interval feasibility") {
    const MarketSpec m = demo::market();
    const CutoffVector c = demo::cutoffs();
    const auto census = demo::census();
    for (const auto& ty : census)
        CHECK(favorite_lottery_positive(m, type_view(ty), c, 3));

    SECTION("a preferred sure-win lottery school on another lottery kills positivity") {
        MarketSpec m2 = m;
        m2.schools.push_back({4, 3.0, SchoolKind::Lottery, 1, 0});
        CutoffVector c2{{0.0, kThird, kTwoThirds, 0.5, 0.0}};
        StudentProfile st;
        st.preferences = {4, 3, 0};
        st.scores = {0.0};
        st.lottery_draws = {0.0, 0.0};
        st.qualifiers = {0, 0, 0, 0, 0};
        CHECK_FALSE(favorite_lottery_positive(m2, type_view(st), c2, 3));
    }

    SECTION("shared lottery: contained win interval kills positivity") {
        // Preferred school on the same lottery with a lower threshold: winning
        // at the target forces winning at the preferred school first.
        MarketSpec m2 = m;
        m2.schools.push_back({4, 0.1, SchoolKind::Lottery, 2, 0});  // shares lottery 2
        CutoffVector c2{{0.0, kThird, kTwoThirds, 0.5, 0.3}};
        StudentProfile st;
        st.preferences = {4, 3, 0};
        st.scores = {0.0};
        st.lottery_draws = {0.0, 0.0};
        st.qualifiers = {0, 0, 0, 0, 0};
        CHECK_FALSE(favorite_lottery_positive(m2, type_view(st), c2, 3));

        // Monte Carlo oracle over one million draws agrees with the verdict,
        // here and in the flipped configuration where the interval opens up.
        CutoffVector c3{{0.0, kThird, kTwoThirds, 0.3, 0.5}};
        CHECK(favorite_lottery_positive(m2, type_view(st), c3, 3));
        Rng rng(8181);
        int hits_blocked = 0, hits_open = 0;
        for (int it = 0; it < 1000000; ++it) {
            st.lottery_draws = {rng.uniform01(), rng.uniform01()};
            if (assign_at_cutoffs(m2, st, c2) == 3) hits_blocked += 1;
            if (assign_at_cutoffs(m2, st, c3) == 3) hits_open += 1;
        }
        CHECK(hits_blocked == 0);
        CHECK(hits_open > 0);
    }
}

TEST_CASE("worked-example eligibility table, all twelve entries") {
    const MarketSpec m = demo::market();
    const CutoffVector c = demo::cutoffs();
    const auto census = demo::census();
    const Region e0 = region1(Interval::half_open(0.0, kThird));
    const Region e1 = region1(Interval::half_open(kThird, kTwoThirds));
    const Region e2 = region1(Interval::closed(kTwoThirds, 1.0));

    const Region expected[3][4] = {
        {e0, e1, e2, region1(Interval::half_open(0.0, kTwoThirds))},
        {e0, e1, e2, region1(Interval::half_open(0.0, kThird))},
        {e0, e1, e2, region1(Interval::closed(0.0, 1.0))},
    };
    for (int ty = 0; ty < 3; ++ty)
        for (int s = 0; s < 4; ++s) {
            CAPTURE(ty, s);
            CHECK(eligibility_set(m, type_view(census[static_cast<std::size_t>(ty)]), c, s) ==
                  expected[ty][s]);
        }
}

TEST_CASE("worked-example contrast table, all eighteen entries") {
    const MarketSpec m = demo::market();
    const CutoffVector c = demo::cutoffs();
    const auto census = demo::census();
    const Region none = Region::empty_region(1);
    const Region pt13 = region1(Interval::point(kThird));
    const Region pt23 = region1(Interval::point(kTwoThirds));
    const Region lo = region1(Interval::closed(0.0, kThird));
    const Region mid = region1(Interval::closed(kThird, kTwoThirds));
    const Region hi = region1(Interval::closed(kTwoThirds, 1.0));

    struct Expected {
        Region region;
        Variation variation;
    };
    const auto L = Variation::LotteryDriven;
    const auto R = Variation::RdDriven;
    const auto U = Variation::Unidentified;
    // Pair columns ordered (0,1) (0,2) (0,3) (1,2) (1,3) (2,3).
    const Expected expected[3][6] = {
        {{pt13, R}, {none, U}, {lo, L}, {pt23, R}, {mid, L}, {pt23, R}},
        {{pt13, R}, {none, U}, {lo, L}, {pt23, R}, {pt13, R}, {none, U}},
        {{pt13, R}, {none, U}, {lo, L}, {pt23, R}, {mid, L}, {hi, L}},
    };
    const std::pair<int, int> pairs[6] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
    for (int ty = 0; ty < 3; ++ty) {
        const TypeView view = type_view(census[static_cast<std::size_t>(ty)]);
        for (int p = 0; p < 6; ++p) {
            CAPTURE(ty, p);
            const auto [a, b] = pairs[p];
            const int s1 = view.prefers(a, b) ? a : b;
            const int s0 = s1 == a ? b : a;
            const ContrastReport rep = identified_contrast_region(m, view, c, s1, s0);
            CHECK(rep.variation == expected[ty][p].variation);
            CHECK(rep.region.same_up_to_closure(expected[ty][p].region));
            CHECK(rep.region.measure() == expected[ty][p].region.measure());
            if (rep.variation == Variation::RdDriven) {
                REQUIRE(rep.rd_cutoff.has_value());
                CHECK(rep.rd_cutoff->first == 1);
                CHECK(rep.region.per_test[0].lower == rep.rd_cutoff->second);
            }
        }
    }
}

TEST_CASE("contrast region demands the stated preference order") {
    const MarketSpec m = demo::market();
    const auto census = demo::census();
    CHECK_THROWS_AS(identified_contrast_region(m, type_view(census[0]), demo::cutoffs(), 0, 2),
                    ConfigError);
}

TEST_CASE("enumeration summarizes the identified landscape") {
    const MarketSpec m = demo::market();
    const auto census = demo::census();
    const AteEnumeration listing = enumerate_identified_ates(m, demo::cutoffs(), census);
    CHECK(listing.entries.size() == 18);
    CHECK(listing.rd_count == 8);
    CHECK(listing.unidentified_count == 4);
    // Lottery-driven mass: A (1/3 + 1/3), B 1/3, C (1/3 + 1/3 + 1/3).
    CHECK(listing.positive_measure_mass == Catch::Approx(2.0));

    SECTION("all-lottery markets have no rd-driven contrasts") {
        Rng rng(31);
        testutil::RandomMarketOptions opt;
        opt.lottery_only = true;
        for (int it = 0; it < 20; ++it) {
            const MarketSpec lm = testutil::random_market(rng, opt);
            const auto types = testutil::random_roster(rng, lm, 4);
            const auto lot = enumerate_identified_ates(lm, testutil::random_cutoffs(rng, lm), types);
            CHECK(lot.rd_count == 0);
        }
    }

    SECTION("all-test single-shared-test markets are rd or unidentified only") {
        MarketSpec tm;
        tm.num_tests = 1;
        tm.num_lotteries = 1;
        tm.schools = {{0, kInfiniteCapacity, SchoolKind::Lottery, 1, 0},
                      {1, 0.2, SchoolKind::TestScore, 1, 0},
                      {2, 0.2, SchoolKind::TestScore, 1, 0},
                      {3, 0.2, SchoolKind::TestScore, 1, 0}};
        CutoffVector c{{0.0, 0.2, 0.45, 0.8}};
        StudentProfile ty;
        ty.preferences = {3, 2, 1, 0};
        ty.scores = {0.0};
        ty.lottery_draws = {0.0};
        ty.qualifiers = {0, 0, 0, 0};
        const auto listing2 = enumerate_identified_ates(tm, c, {ty});
        for (const auto& e : listing2.entries)
            CHECK(e.report.variation != Variation::LotteryDriven);
        CHECK(listing2.rd_count > 0);
    }
}

TEST_CASE("pair dichotomy: lottery pairs keep the whole set, test pairs a slice") {
    Rng rng(4242);
    int lottery_pairs = 0, rd_pairs = 0;
    for (int it = 0; it < 200; ++it) {
        const MarketSpec m = testutil::random_market(rng);
        const CutoffVector c = testutil::random_cutoffs(rng, m);
        const StudentProfile ty = testutil::random_student(rng, m);
        const TypeView view = type_view(ty);
        for (std::size_t a = 0; a < ty.preferences.size(); ++a)
            for (std::size_t b = a + 1; b < ty.preferences.size(); ++b) {
                const int s1 = ty.preferences[a], s0 = ty.preferences[b];
                const ContrastReport rep = identified_contrast_region(m, view, c, s1, s0);
                if (rep.variation == Variation::Unidentified) {
                    CHECK(rep.region.empty());
                    continue;
                }
                if (m.school(s1).is_lottery()) {
                    lottery_pairs += 1;
                    CHECK(rep.region == eligibility_set(m, view, c, s0).closure());
                } else {
                    rd_pairs += 1;
                    CHECK(rep.region.measure() == 0.0);
                    CHECK(rep.rd_cutoff.has_value());
                }
            }
    }
    CHECK(lottery_pairs > 50);
    CHECK(rd_pairs > 50);
}

TEST_CASE("eligibility sets match fixed-cutoff assignment frequencies") {
    // Simulation-consistency oracle on a handful of random small markets: the
    // eligibility set contains a grid score iff assignment at fixed cutoffs
    // hits the school for some lottery draw.
    Rng rng(555);
    for (int mk = 0; mk < 6; ++mk) {
        const MarketSpec m = testutil::random_market(rng);
        const CutoffVector c = testutil::random_cutoffs(rng, m);
        StudentProfile ty = testutil::random_student(rng, m);
        const TypeView view = type_view(ty);
        std::vector<Region> sets;
        for (int s = 0; s < m.num_schools(); ++s) sets.push_back(eligibility_set(m, view, c, s));
        const int draws = 3000;
        std::vector<std::vector<double>> lotteries(draws);
        for (auto& u : lotteries) {
            u.resize(static_cast<std::size_t>(m.num_lotteries));
            for (auto& v : u) v = rng.uniform01();
        }
        for (int g = 1; g < 200; g += 7) {  // stride keeps the scan affordable
            if (m.num_tests == 1) {
                ty.scores = {g / 200.0};
            } else {
                ty.scores = {g / 200.0, ((g * 31) % 199 + 0.5) / 200.0};
            }
            std::vector<char> hit(static_cast<std::size_t>(m.num_schools()), 0);
            for (const auto& u : lotteries) {
                ty.lottery_draws = u;
                hit[static_cast<std::size_t>(assign_at_cutoffs(m, ty, c))] = 1;
            }
            for (int s = 0; s < m.num_schools(); ++s) {
                CAPTURE(mk, g, s);
                REQUIRE(sets[static_cast<std::size_t>(s)].contains(ty.scores) == (hit[static_cast<std::size_t>(s)] == 1));
            }
        }
    }
}
