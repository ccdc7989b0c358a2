#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "schoolrd/dgp.hpp"
#include "schoolrd/eligibility.hpp"
#include "schoolrd/error.hpp"
#include "schoolrd/estimator.hpp"
#include "schoolrd/experiments.hpp"
#include "schoolrd/market.hpp"
#include "schoolrd/propensity.hpp"
#include "schoolrd/rng.hpp"
#include "schoolrd/validate.hpp"

namespace schoolrd {

// All floats in artifacts print with 12 significant digits so outputs diff
// byte-stably across runs.
inline std::string fmt12(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

inline nlohmann::json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return j;
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write file: " + path);
    out << content;
}

// ---- market ----------------------------------------------------------------

inline MarketSpec market_from_json(const nlohmann::json& j) {
    MarketSpec m;
    try {
        m.num_tests = j.at("num_tests").get<int>();
        m.num_lotteries = j.at("num_lotteries").get<int>();
        for (const auto& js : j.at("schools")) {
            SchoolSpec sp;
            sp.id = js.at("id").get<int>();
            const auto& cap = js.at("capacity_share");
            sp.capacity_share = cap.is_string() ? kInfiniteCapacity : cap.get<double>();
            const std::string kind = js.at("kind").get<std::string>();
            if (kind == "lottery") sp.kind = SchoolKind::Lottery;
            else if (kind == "test") sp.kind = SchoolKind::TestScore;
            else throw ConfigError("school kind must be 'lottery' or 'test', got '" + kind + "'");
            sp.index = js.at("index").get<int>();
            sp.qualifier_max = js.value("qualifier_max", 0);
            m.schools.push_back(sp);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("market spec: ") + e.what());
    }
    m.validate();
    return m;
}

inline nlohmann::json market_to_json(const MarketSpec& m) {
    nlohmann::json j;
    j["num_tests"] = m.num_tests;
    j["num_lotteries"] = m.num_lotteries;
    j["schools"] = nlohmann::json::array();
    for (const auto& sp : m.schools) {
        nlohmann::json js;
        js["id"] = sp.id;
        if (sp.capacity_share == kInfiniteCapacity) js["capacity_share"] = "inf";
        else js["capacity_share"] = sp.capacity_share;
        js["kind"] = sp.is_test() ? "test" : "lottery";
        js["index"] = sp.index;
        js["qualifier_max"] = sp.qualifier_max;
        j["schools"].push_back(js);
    }
    return j;
}

inline MarketSpec load_market(const std::string& path) { return market_from_json(load_json_file(path)); }

// ---- cutoffs ----------------------------------------------------------------

inline CutoffVector cutoffs_from_json(const nlohmann::json& j) {
    CutoffVector c;
    const auto& arr = j.is_array() ? j : j.at("cutoffs");
    for (const auto& v : arr) c.values.push_back(v.get<double>());
    return c;
}

inline CutoffVector load_cutoffs(const std::string& path, const MarketSpec& market) {
    CutoffVector c = cutoffs_from_json(load_json_file(path));
    c.validate(market);
    return c;
}

inline std::string cutoffs_to_text(const CutoffVector& c) {
    std::string out = "{\"cutoffs\": [";
    for (std::size_t s = 0; s < c.values.size(); ++s) {
        if (s) out += ", ";
        out += fmt12(c.values[s]);
    }
    out += "]}\n";
    return out;
}

// ---- dgp --------------------------------------------------------------------

inline ScoreDensity density_from_json(const nlohmann::json& j) {
    const std::string fam = j.value("family", "uniform");
    if (fam == "uniform") return ScoreDensity::uniform();
    if (fam == "sin-squared")
        return ScoreDensity::sin_squared(j.at("amplitude").get<double>(), j.at("lobes").get<int>());
    throw ConfigError("unknown score density family '" + fam + "'");
}

inline NoiseLaw noise_from_json(const nlohmann::json& j) {
    const std::string kind = j.value("kind", "gaussian");
    if (kind == "gaussian") return NoiseLaw::gaussian(j.value("sigma", 1.0));
    if (kind == "pareto") return NoiseLaw::pareto(j.value("alpha", 2.5), j.value("scale", 1.0));
    throw ConfigError("unknown noise kind '" + kind + "'");
}

inline OutcomeMean outcome_mean_from_json(const nlohmann::json& j, int num_tests) {
    OutcomeMean mu;
    mu.c0 = j.value("c0", 0.0);
    mu.per_test.assign(static_cast<std::size_t>(num_tests), {0.0, 0.0, 0.0});
    if (j.contains("coeffs")) {
        const auto& rows = j.at("coeffs");
        for (std::size_t t = 0; t < rows.size() && t < mu.per_test.size(); ++t)
            for (std::size_t k = 0; k < 3 && k < rows[t].size(); ++k)
                mu.per_test[t][k] = rows[t][k].get<double>();
    }
    return mu;
}

inline DgpSpec dgp_from_json(const nlohmann::json& j) {
    DgpSpec d;
    try {
        d.market = market_from_json(j.at("market"));
        if (j.contains("lottery_law")) {
            const auto& jl = j.at("lottery_law");
            const std::string kind = jl.value("kind", "independent");
            if (kind == "independent") d.lottery_law = {};
            else if (kind == "gaussian-copula")
                d.lottery_law = {LotteryLaw::Kind::GaussianCopula, jl.at("rho").get<double>()};
            else throw ConfigError("unknown lottery law '" + kind + "'");
        }
        if (j.contains("known_cutoffs")) d.known_cutoffs = cutoffs_from_json(j.at("known_cutoffs"));
        for (const auto& jt : j.at("types")) {
            StudentType ty;
            ty.label = jt.value("label", "type" + std::to_string(d.types.size()));
            ty.share = jt.at("share").get<double>();
            ty.preferences = jt.at("preferences").get<std::vector<int>>();
            if (jt.contains("qualifiers")) ty.qualifiers = jt.at("qualifiers").get<std::vector<int>>();
            else ty.qualifiers.assign(d.market.schools.size(), 0);
            if (jt.contains("score_density"))
                for (const auto& jd : jt.at("score_density")) ty.score_density.push_back(density_from_json(jd));
            else ty.score_density.assign(static_cast<std::size_t>(d.market.num_tests), ScoreDensity::uniform());
            if (jt.contains("outcome_mean"))
                for (const auto& jm : jt.at("outcome_mean"))
                    ty.outcome_mean.push_back(outcome_mean_from_json(jm, d.market.num_tests));
            else
                ty.outcome_mean.assign(d.market.schools.size(), OutcomeMean{0.0, std::vector<std::array<double, 3>>(static_cast<std::size_t>(d.market.num_tests), {0.0, 0.0, 0.0})});
            for (auto& mu : ty.outcome_mean)
                if (mu.per_test.empty()) mu.per_test.assign(static_cast<std::size_t>(d.market.num_tests), {0.0, 0.0, 0.0});
            if (jt.contains("noise")) ty.noise = noise_from_json(jt.at("noise"));
            d.types.push_back(std::move(ty));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("dgp spec: ") + e.what());
    }
    d.validate();
    return d;
}

inline DgpSpec load_dgp(const std::string& path) { return dgp_from_json(load_json_file(path)); }

// Census: preference types without outcome structure.
inline std::vector<StudentProfile> census_from_json(const nlohmann::json& j, const MarketSpec& market,
                                                    std::vector<std::string>* labels = nullptr,
                                                    std::vector<double>* shares = nullptr) {
    std::vector<StudentProfile> out;
    for (const auto& jt : (j.is_array() ? j : j.at("types"))) {
        StudentProfile st;
        st.preferences = jt.at("preferences").get<std::vector<int>>();
        if (jt.contains("qualifiers")) st.qualifiers = jt.at("qualifiers").get<std::vector<int>>();
        else st.qualifiers.assign(market.schools.size(), 0);
        st.scores.assign(static_cast<std::size_t>(market.num_tests), 0.0);
        st.lottery_draws.assign(static_cast<std::size_t>(market.num_lotteries), 0.0);
        if (labels) labels->push_back(jt.value("label", "type" + std::to_string(out.size())));
        if (shares) shares->push_back(jt.value("share", 0.0));
        out.push_back(std::move(st));
    }
    if (out.empty()) throw ConfigError("census: no types");
    return out;
}

// ---- roster (delimited table) ------------------------------------------------

struct Roster {
    std::vector<StudentProfile> students;
    std::vector<double> outcomes;  // empty unless the file carries a y column
    bool draws_generated = false;
};

namespace detail {

inline std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == sep) {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

inline std::vector<int> parse_pref_list(const std::string& s, std::size_t row) {
    std::vector<int> prefs;
    std::string cur;
    for (char ch : s) {
        if (ch == '>') {
            if (cur.empty()) throw DataError("roster row " + std::to_string(row) + ": empty preference entry");
            prefs.push_back(std::stoi(cur));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    if (!cur.empty()) prefs.push_back(std::stoi(cur));
    return prefs;
}

}  // namespace detail

// Roster rows: pref list ('>'-separated school ids), T score columns, M+1
// qualifier columns, L draw columns (optional; generated when absent), and an
// optional outcome column y.
inline Roster load_roster(const std::string& path, const MarketSpec& market,
                          std::uint64_t seed = 0) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open roster: " + path);
    std::string header;
    if (!std::getline(in, header)) throw DataError("roster: empty file " + path);
    const auto cols = detail::split(header, ',');
    const int T = market.num_tests, L = market.num_lotteries, M = market.num_schools();
    std::size_t y_col = cols.size();
    bool has_draws = false;
    for (std::size_t k = 0; k < cols.size(); ++k) {
        if (cols[k] == "y") y_col = k;
        if (cols[k] == "u1") has_draws = true;
    }
    const std::size_t expected = 1 + static_cast<std::size_t>(T + M) + (has_draws ? static_cast<std::size_t>(L) : 0) +
                                 (y_col < cols.size() ? 1 : 0);
    if (cols.size() != expected)
        throw DataError("roster header: expected " + std::to_string(expected) + " columns (pref, r1..r" +
                        std::to_string(T) + ", q0..q" + std::to_string(M - 1) +
                        (has_draws ? ", u1..u" + std::to_string(L) : "") + (y_col < cols.size() ? ", y" : "") +
                        "), found " + std::to_string(cols.size()));

    Roster roster;
    Rng rng(splitmix64(seed ^ 0xd0a7e5ULL));
    roster.draws_generated = !has_draws;
    std::string line;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        row += 1;
        if (line.empty()) continue;
        const auto f = detail::split(line, ',');
        if (f.size() != cols.size())
            throw DataError("roster row " + std::to_string(row) + ": expected " + std::to_string(cols.size()) +
                            " fields, found " + std::to_string(f.size()));
        StudentProfile st;
        std::size_t k = 0;
        try {
            st.preferences = detail::parse_pref_list(f[k++], row);
            for (int t = 0; t < T; ++t) st.scores.push_back(std::stod(f[k++]));
            for (int s = 0; s < M; ++s) st.qualifiers.push_back(std::stoi(f[k++]));
            if (has_draws)
                for (int l = 0; l < L; ++l) st.lottery_draws.push_back(std::stod(f[k++]));
            else
                for (int l = 0; l < L; ++l) st.lottery_draws.push_back(rng.uniform01());
            if (y_col < cols.size()) roster.outcomes.push_back(std::stod(f[k++]));
        } catch (const std::invalid_argument&) {
            throw DataError("roster row " + std::to_string(row) + ": unparsable number");
        } catch (const std::out_of_range&) {
            throw DataError("roster row " + std::to_string(row) + ": number out of range");
        }
        validate_profile(market, st, row - 2);
        roster.students.push_back(std::move(st));
    }
    if (roster.students.empty()) throw DataError("roster: no rows in " + path);
    return roster;
}

inline std::string roster_to_csv(const MarketSpec& market, const std::vector<StudentProfile>& students,
                                 const std::vector<double>* outcomes = nullptr) {
    std::string out = "pref";
    for (int t = 1; t <= market.num_tests; ++t) out += ",r" + std::to_string(t);
    for (int s = 0; s < market.num_schools(); ++s) out += ",q" + std::to_string(s);
    for (int l = 1; l <= market.num_lotteries; ++l) out += ",u" + std::to_string(l);
    if (outcomes) out += ",y";
    out += "\n";
    for (std::size_t i = 0; i < students.size(); ++i) {
        const auto& st = students[i];
        for (std::size_t k = 0; k < st.preferences.size(); ++k) {
            if (k) out += ">";
            out += std::to_string(st.preferences[k]);
        }
        for (double r : st.scores) out += "," + fmt12(r);
        for (int q : st.qualifiers) out += "," + std::to_string(q);
        for (double u : st.lottery_draws) out += "," + fmt12(u);
        if (outcomes) out += "," + fmt12((*outcomes)[i]);
        out += "\n";
    }
    return out;
}

// ---- report documents ---------------------------------------------------------

inline std::string estimate_report_text(const EstimateReport& r) {
    std::ostringstream out;
    out << "tau_hat = " << fmt12(r.tau_hat) << "\n";
    out << "beta_plus_intercept = " << fmt12(r.beta_plus[0]) << "\n";
    out << "beta_plus_slope = " << fmt12(r.beta_plus[1]) << "\n";
    out << "beta_minus_intercept = " << fmt12(r.beta_minus[0]) << "\n";
    out << "beta_minus_slope = " << fmt12(r.beta_minus[1]) << "\n";
    out << "n_plus = " << r.n_plus << "\n";
    out << "n_minus = " << r.n_minus << "\n";
    out << "sigma2_hat = " << fmt12(r.sigma2_hat) << "\n";
    out << "ci_lower = " << fmt12(r.ci_lower) << "\n";
    out << "ci_upper = " << fmt12(r.ci_upper) << "\n";
    out << "bandwidth = " << fmt12(r.bandwidth) << "\n";
    out << "cutoff = " << fmt12(r.cutoff) << "\n";
    out << "below_sqrt_rate = " << (r.below_sqrt_rate ? 1 : 0) << "\n";
    out << "above_undersmoothing = " << (r.above_undersmoothing ? 1 : 0) << "\n";
    return out.str();
}

inline std::string experiment_report_text(const ExperimentReport& r) {
    std::ostringstream out;
    out << "experiment = " << r.name << "\n";
    out << "seed = " << r.seed << "\n";
    out << "replications = " << r.replications << "\n";
    out << "n_grid =";
    for (auto n : r.n_grid) out << " " << n;
    out << "\n";
    for (const auto& [k, v] : r.metrics) out << k << " = " << fmt12(v) << "\n";
    for (const auto& note : r.notes) out << "note: " << note << "\n";
    out << "degenerate = " << (r.degenerate ? 1 : 0) << "\n";
    out << "pass = " << (r.pass ? 1 : 0) << "\n";
    return out.str();
}

inline std::string experiment_rows_csv(const ExperimentReport& r) {
    std::string out;
    for (std::size_t k = 0; k < r.row_columns.size(); ++k) {
        if (k) out += ",";
        out += r.row_columns[k];
    }
    out += "\n";
    for (const auto& row : r.rows) {
        for (std::size_t k = 0; k < row.size(); ++k) {
            if (k) out += ",";
            out += fmt12(row[k]);
        }
        out += "\n";
    }
    return out;
}

inline std::string validation_report_text(const ValidationReport& r) {
    std::ostringstream out;
    out << "cutoffs =";
    for (double c : r.cutoffs_used.values) out << " " << fmt12(c);
    out << "\n";
    for (const auto& chk : r.checks)
        out << chk.label << " = " << to_string(chk.status) << (chk.detail.empty() ? "" : "  # " + chk.detail)
            << "\n";
    out << "any_violation = " << (r.any_violation() ? 1 : 0) << "\n";
    return out.str();
}

// ---- worked-example tables -----------------------------------------------------

// Eligibility sets per type and school, wide like the source table.
inline std::string eligibility_table_text(const MarketSpec& market,
                                          const std::vector<StudentProfile>& census,
                                          const std::vector<std::string>& labels,
                                          const CutoffVector& cutoffs) {
    std::ostringstream out;
    out << "type";
    for (int s = 0; s < market.num_schools(); ++s) out << "\tE[" << s << "]";
    out << "\n";
    for (std::size_t k = 0; k < census.size(); ++k) {
        out << labels[k];
        const TypeView type = type_view(census[k]);
        for (int s = 0; s < market.num_schools(); ++s)
            out << "\t" << eligibility_set(market, type, cutoffs, s).str();
        out << "\n";
    }
    return out.str();
}

// Closure intersections for every ordered pair, with the variation tag.
inline std::string contrast_table_text(const MarketSpec& market,
                                       const std::vector<StudentProfile>& census,
                                       const std::vector<std::string>& labels,
                                       const CutoffVector& cutoffs) {
    std::ostringstream out;
    std::vector<std::pair<int, int>> pairs;
    for (int a = 0; a < market.num_schools(); ++a)
        for (int b = a + 1; b < market.num_schools(); ++b) pairs.emplace_back(a, b);
    out << "type";
    for (const auto& [a, b] : pairs) out << "\t(" << a << "," << b << ")";
    out << "\n";
    for (std::size_t k = 0; k < census.size(); ++k) {
        const TypeView type = type_view(census[k]);
        out << labels[k];
        for (const auto& [a, b] : pairs) {
            const int s1 = type.prefers(a, b) ? a : b;
            const int s0 = s1 == a ? b : a;
            const ContrastReport rep = identified_contrast_region(market, type, cutoffs, s1, s0);
            out << "\t" << rep.region.str();
        }
        out << "\n";
    }
    out << "\nvariation\n";
    for (std::size_t k = 0; k < census.size(); ++k) {
        const TypeView type = type_view(census[k]);
        out << labels[k];
        for (const auto& [a, b] : pairs) {
            const int s1 = type.prefers(a, b) ? a : b;
            const int s0 = s1 == a ? b : a;
            const ContrastReport rep = identified_contrast_region(market, type, cutoffs, s1, s0);
            out << "\t" << to_string(rep.variation);
        }
        out << "\n";
    }
    return out.str();
}

inline std::string psi_table_text(const std::vector<PropensityCell>& cells,
                                  const BandPartition& bp, const std::vector<std::string>& labels) {
    std::ostringstream out;
    out << "type";
    for (const auto& piece : bp.pieces) out << "\t" << piece.label;
    out << "\n";
    for (const auto& label : labels) {
        out << label;
        for (const auto& piece : bp.pieces) {
            for (const auto& cell : cells)
                if (cell.type_label == label && cell.region_label == piece.label)
                    out << "\t" << fmt12(cell.psi);
        }
        out << "\n";
    }
    return out.str();
}

}  // namespace schoolrd
