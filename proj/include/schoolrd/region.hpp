#pragma once

#include <algorithm>
#include <cstdio>
#include <string>
#include <vector>

#include "schoolrd/error.hpp"

namespace schoolrd {

// A sub-interval of [0,1] with explicit endpoint closedness, plus a distinct
// empty marker. Zero-length half-open intervals normalize to empty; point
// intervals are closed at both ends. All operations are exact (no epsilon).
struct Interval {
    double lower = 0.0, upper = 0.0;
    bool lower_closed = true, upper_closed = true;
    bool is_empty = true;

    Interval() = default;  // empty

    static Interval make(double lo, double hi, bool lo_closed, bool hi_closed) {
        if (lo > hi) return Interval{};
        if (lo == hi && !(lo_closed && hi_closed)) return Interval{};
        Interval iv;
        iv.lower = lo;
        iv.upper = hi;
        iv.lower_closed = lo_closed;
        iv.upper_closed = hi_closed;
        iv.is_empty = false;
        return iv;
    }
    static Interval closed(double lo, double hi) { return make(lo, hi, true, true); }
    static Interval half_open(double lo, double hi) { return make(lo, hi, true, false); }
    static Interval point(double x) { return make(x, x, true, true); }
    static Interval empty() { return Interval{}; }

    bool is_point() const { return !is_empty && lower == upper; }
    double length() const { return is_empty ? 0.0 : upper - lower; }

    bool contains(double x) const {
        if (is_empty) return false;
        if (x < lower || x > upper) return false;
        if (x == lower && !lower_closed) return false;
        if (x == upper && !upper_closed) return false;
        return true;
    }

    Interval closure() const {
        return is_empty ? Interval{} : make(lower, upper, true, true);
    }

    // Open interior, as an Interval with open flags.
    Interval interior() const {
        if (is_empty) return Interval{};
        return make(lower, upper, false, false);
    }

    Interval intersect(const Interval& o) const {
        if (is_empty || o.is_empty) return Interval{};
        double lo, hi;
        bool lc, hc;
        if (lower > o.lower) { lo = lower; lc = lower_closed; }
        else if (lower < o.lower) { lo = o.lower; lc = o.lower_closed; }
        else { lo = lower; lc = lower_closed && o.lower_closed; }
        if (upper < o.upper) { hi = upper; hc = upper_closed; }
        else if (upper > o.upper) { hi = o.upper; hc = o.upper_closed; }
        else { hi = upper; hc = upper_closed && o.upper_closed; }
        return make(lo, hi, lc, hc);
    }

    // Widen both ends by h and clip to [0,1]; endpoints become closed.
    Interval enlarged(double h) const {
        if (is_empty) return Interval{};
        return closed(std::max(0.0, lower - h), std::min(1.0, upper + h));
    }

    bool operator==(const Interval& o) const {
        if (is_empty || o.is_empty) return is_empty == o.is_empty;
        return lower == o.lower && upper == o.upper && lower_closed == o.lower_closed &&
               upper_closed == o.upper_closed;
    }

    std::string str() const {
        if (is_empty) return "{}";
        char buf[96];
        if (is_point()) {
            std::snprintf(buf, sizeof buf, "{%.12g}", lower);
            return buf;
        }
        std::snprintf(buf, sizeof buf, "%c%.12g, %.12g%c", lower_closed ? '[' : '(', lower,
                      upper, upper_closed ? ']' : ')');
        return buf;
    }
};

// A product of per-test intervals in [0,1]^T. The theorems of this domain
// never produce non-product sets, so the Lebesgue measure is the product of
// interval lengths.
struct Region {
    std::vector<Interval> per_test;

    Region() = default;
    explicit Region(int num_tests) : per_test(static_cast<std::size_t>(num_tests)) {}

    static Region empty_region(int num_tests) {
        Region r(num_tests);
        return r;  // default intervals are empty
    }
    static Region full(int num_tests) {
        Region r(num_tests);
        for (auto& iv : r.per_test) iv = Interval::closed(0.0, 1.0);
        return r;
    }

    int num_tests() const { return static_cast<int>(per_test.size()); }

    bool empty() const {
        for (const auto& iv : per_test)
            if (iv.is_empty) return true;
        return per_test.empty();
    }

    double measure() const {
        if (empty()) return 0.0;
        double m = 1.0;
        for (const auto& iv : per_test) m *= iv.length();
        return m;
    }

    bool contains(const std::vector<double>& r) const {
        if (empty() || r.size() != per_test.size()) return false;
        for (std::size_t t = 0; t < per_test.size(); ++t)
            if (!per_test[t].contains(r[t])) return false;
        return true;
    }

    Region closure() const {
        Region out = *this;
        if (empty()) return empty_region(num_tests());
        for (auto& iv : out.per_test) iv = iv.closure();
        return out;
    }

    Region intersect(const Region& o) const {
        if (num_tests() != o.num_tests()) throw ConfigError("region intersect: dimension mismatch");
        Region out(num_tests());
        for (std::size_t t = 0; t < per_test.size(); ++t)
            out.per_test[t] = per_test[t].intersect(o.per_test[t]);
        if (out.empty()) return empty_region(num_tests());
        return out;
    }

    // Slice_t: intersect coordinate t (1-based) with `s`.
    Region slice(int test, const Interval& s) const {
        Region out = *this;
        if (empty()) return empty_region(num_tests());
        auto& coord = out.per_test.at(static_cast<std::size_t>(test - 1));
        coord = coord.intersect(s);
        if (out.empty()) return empty_region(num_tests());
        return out;
    }

    // Equality up to boundary-point conventions: identical closures and
    // identical measures. This is the comparison the golden tables use, since
    // the source tables print endpoint conventions inconsistently.
    bool same_up_to_closure(const Region& o) const {
        return closure() == o.closure() && measure() == o.measure();
    }

    bool operator==(const Region& o) const {
        if (num_tests() != o.num_tests()) return false;
        if (empty() || o.empty()) return empty() == o.empty();
        for (std::size_t t = 0; t < per_test.size(); ++t)
            if (!(per_test[t] == o.per_test[t])) return false;
        return true;
    }

    std::string str() const {
        if (empty()) return "{}";
        std::string s;
        for (std::size_t t = 0; t < per_test.size(); ++t) {
            if (t) s += " x ";
            s += per_test[t].str();
        }
        return s;
    }
};

}  // namespace schoolrd
