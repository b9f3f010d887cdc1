#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "rational.hpp"

namespace density_sieve {

/// Half-open interval [lo, hi). Stored intervals are never empty.
struct Interval {
    Rational lo;
    Rational hi;

    Rational length() const { return hi - lo; }
    bool contains(const Rational& x) const { return lo <= x && x < hi; }
    friend bool operator==(const Interval&, const Interval&) = default;
};

/// The bounded piece of the line every set lives in.
struct Window {
    Rational lo{0};
    Rational hi{1};

    Window() = default;
    Window(Rational l, Rational h) : lo(std::move(l)), hi(std::move(h)) {
        if (!(lo < hi)) throw SpecError("window needs lo < hi, got [" + lo.str() + ", " + hi.str() + ")");
    }

    Rational length() const { return hi - lo; }
    /// Affine image of u in [0,1] into the window.
    Rational at(const Rational& u) const { return lo + (hi - lo) * u; }
    Interval as_interval() const { return {lo, hi}; }
    friend bool operator==(const Window&, const Window&) = default;
};

/// Normalized finite union of half-open intervals inside a window: sorted,
/// pairwise disjoint, with touching neighbours merged.
class IntervalUnion {
public:
    explicit IntervalUnion(Window w = {}) : window_(std::move(w)) {}

    static IntervalUnion empty(const Window& w) { return IntervalUnion(w); }
    static IntervalUnion full(const Window& w) {
        IntervalUnion u(w);
        u.intervals_.push_back(w.as_interval());
        return u;
    }

    /// Canonical form of an arbitrary list of intervals clipped to `w`.
    static IntervalUnion normalize(std::vector<Interval> raw, const Window& w) {
        std::vector<Interval> clipped;
        clipped.reserve(raw.size());
        for (auto& iv : raw) {
            Rational lo = std::max(iv.lo, w.lo);
            Rational hi = std::min(iv.hi, w.hi);
            if (lo < hi) clipped.push_back({std::move(lo), std::move(hi)});
        }
        auto by_lo = [](const Interval& a, const Interval& b) { return a.lo < b.lo; };
        if (!std::is_sorted(clipped.begin(), clipped.end(), by_lo)) std::sort(clipped.begin(), clipped.end(), by_lo);
        IntervalUnion u(w);
        u.intervals_ = coalesce_sorted(std::move(clipped));
        return u;
    }

    const Window& window() const { return window_; }
    const std::vector<Interval>& intervals() const { return intervals_; }
    std::size_t size() const { return intervals_.size(); }
    bool is_empty() const { return intervals_.empty(); }

    Rational measure() const {
        Rational total;
        for (const auto& iv : intervals_) total += iv.length();
        return total;
    }

    bool contains(const Rational& x) const {
        auto it = std::upper_bound(intervals_.begin(), intervals_.end(), x,
                                   [](const Rational& v, const Interval& iv) { return v < iv.lo; });
        if (it == intervals_.begin()) return false;
        return std::prev(it)->contains(x);
    }

    friend bool operator==(const IntervalUnion&, const IntervalUnion&) = default;

private:
    friend IntervalUnion unite(const IntervalUnion&, const IntervalUnion&);
    friend IntervalUnion intersect(const IntervalUnion&, const IntervalUnion&);
    friend IntervalUnion complement_within(const IntervalUnion&);
    friend IntervalUnion kfold_region(const Window&, std::span<const IntervalUnion>, std::size_t);

    // Input sorted by lo; output merged.
    static std::vector<Interval> coalesce_sorted(std::vector<Interval> sorted) {
        std::vector<Interval> out;
        out.reserve(sorted.size());
        for (auto& iv : sorted) {
            if (!out.empty() && iv.lo <= out.back().hi) {
                if (out.back().hi < iv.hi) out.back().hi = std::move(iv.hi);
            } else {
                out.push_back(std::move(iv));
            }
        }
        return out;
    }

    Window window_;
    std::vector<Interval> intervals_;
};

namespace detail {
inline void require_same_window(const IntervalUnion& u, const IntervalUnion& v) {
    if (!(u.window() == v.window())) {
        throw SpecError("window mismatch: [" + u.window().lo.str() + ", " + u.window().hi.str() +
                        ") vs [" + v.window().lo.str() + ", " + v.window().hi.str() + ")");
    }
}
}  // namespace detail

inline IntervalUnion unite(const IntervalUnion& u, const IntervalUnion& v) {
    detail::require_same_window(u, v);
    std::vector<Interval> merged;
    merged.reserve(u.size() + v.size());
    std::merge(u.intervals_.begin(), u.intervals_.end(), v.intervals_.begin(), v.intervals_.end(),
               std::back_inserter(merged),
               [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
    IntervalUnion out(u.window());
    out.intervals_ = IntervalUnion::coalesce_sorted(std::move(merged));
    return out;
}

inline IntervalUnion intersect(const IntervalUnion& u, const IntervalUnion& v) {
    detail::require_same_window(u, v);
    IntervalUnion out(u.window());
    std::size_t i = 0, j = 0;
    const auto& a = u.intervals_;
    const auto& b = v.intervals_;
    while (i < a.size() && j < b.size()) {
        const Rational& lo = std::max(a[i].lo, b[j].lo);
        const Rational& hi = std::min(a[i].hi, b[j].hi);
        if (lo < hi) out.intervals_.push_back({lo, hi});
        if (a[i].hi < b[j].hi) ++i; else ++j;
    }
    // Pieces cut from disjoint, non-touching inputs cannot touch each other.
    return out;
}

inline IntervalUnion complement_within(const IntervalUnion& u) {
    IntervalUnion out(u.window());
    Rational cursor = u.window().lo;
    for (const auto& iv : u.intervals_) {
        if (cursor < iv.lo) out.intervals_.push_back({cursor, iv.lo});
        cursor = iv.hi;
    }
    if (cursor < u.window().hi) out.intervals_.push_back({cursor, u.window().hi});
    return out;
}

/// Points lying in at least `m` of `sets`, by an endpoint sweep carrying a
/// multiplicity counter. m == 0 yields the whole window.
inline IntervalUnion kfold_region(const Window& window, std::span<const IntervalUnion> sets, std::size_t m) {
    if (m == 0) return IntervalUnion::full(window);
    // Each normalized union yields a strictly increasing endpoint stream
    // lo_0 < hi_0 < lo_1 < ...; sweep their k-way merge.
    struct Cursor {
        const std::vector<Interval>* ivs;
        std::size_t pos;  // endpoint index: even = lo, odd = hi
        const Rational& value() const { return pos % 2 ? (*ivs)[pos / 2].hi : (*ivs)[pos / 2].lo; }
    };
    auto later = [](const Cursor& a, const Cursor& b) { return b.value() < a.value(); };
    std::vector<Cursor> heap;
    for (const auto& s : sets) {
        if (!(s.window() == window)) throw SpecError("kfold_region: window mismatch");
        if (!s.intervals().empty()) heap.push_back({&s.intervals(), 0});
    }
    std::make_heap(heap.begin(), heap.end(), later);
    std::vector<Interval> pieces;
    long long depth = 0;
    while (!heap.empty()) {
        const Rational x = heap.front().value();
        while (!heap.empty() && heap.front().value() == x) {
            std::pop_heap(heap.begin(), heap.end(), later);
            Cursor& c = heap.back();
            depth += c.pos % 2 ? -1 : +1;
            if (++c.pos < 2 * c.ivs->size()) {
                std::push_heap(heap.begin(), heap.end(), later);
            } else {
                heap.pop_back();
            }
        }
        if (!heap.empty() && depth >= static_cast<long long>(m)) pieces.push_back({x, heap.front().value()});
    }
    IntervalUnion out(window);
    out.intervals_ = IntervalUnion::coalesce_sorted(std::move(pieces));
    return out;
}

inline IntervalUnion kfold_region(std::span<const IntervalUnion> sets, std::size_t m) {
    if (sets.empty()) throw SpecError("kfold_region: empty family has no window; pass one explicitly");
    return kfold_region(sets.front().window(), sets, m);
}

// ---- JSON: [lo_num, lo_den, hi_num, hi_den] quadruples ----

inline nlohmann::json quad_to_json(const Rational& lo, const Rational& hi) {
    return nlohmann::json::array({to_int64(lo.numerator(), "numerator"), to_int64(lo.denominator(), "denominator"),
                                  to_int64(hi.numerator(), "numerator"), to_int64(hi.denominator(), "denominator")});
}

inline Interval quad_from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 4) throw SpecError("interval must be a [lo_num, lo_den, hi_num, hi_den] array");
    for (const auto& e : j) {
        if (!e.is_number_integer()) throw SpecError("interval quadruple entries must be integers");
    }
    return {Rational(j[0].get<std::int64_t>(), j[1].get<std::int64_t>()),
            Rational(j[2].get<std::int64_t>(), j[3].get<std::int64_t>())};
}

inline nlohmann::json to_json(const Window& w) { return quad_to_json(w.lo, w.hi); }

inline Window window_from_json(const nlohmann::json& j) {
    auto iv = quad_from_json(j);
    return Window(iv.lo, iv.hi);
}

inline nlohmann::json to_json(const IntervalUnion& u) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& iv : u.intervals()) arr.push_back(quad_to_json(iv.lo, iv.hi));
    return {{"window", to_json(u.window())}, {"intervals", std::move(arr)}};
}

/// Strict: every interval must lie inside the window (no silent clipping).
inline IntervalUnion union_from_json(const nlohmann::json& j, const Window* expected_window = nullptr) {
    if (!j.is_object() || !j.contains("window") || !j.contains("intervals") || !j["intervals"].is_array()) {
        throw SpecError("interval union JSON needs 'window' and 'intervals'");
    }
    Window w = window_from_json(j["window"]);
    if (expected_window && !(w == *expected_window)) throw SpecError("interval union window mismatch");
    std::vector<Interval> raw;
    for (const auto& q : j["intervals"]) {
        auto iv = quad_from_json(q);
        if (iv.lo < w.lo || iv.hi > w.hi || iv.hi < iv.lo) {
            throw SpecError("interval [" + iv.lo.str() + ", " + iv.hi.str() + ") escapes window");
        }
        raw.push_back(std::move(iv));
    }
    return IntervalUnion::normalize(std::move(raw), w);
}

}  // namespace density_sieve
