#pragma once

// Brute-force references used by the tests. Each one recomputes a quantity
// from first principles instead of going through the library's fast paths.

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include "density_sieve.hpp"

namespace oracle {

using density_sieve::Interval;
using density_sieve::IntervalUnion;
using density_sieve::Natural;
using density_sieve::Rational;
using density_sieve::Window;

/// Measure of points lying in >= m of the given raw interval lists, by
/// counting at the midpoint of every elementary subinterval. Each list is
/// sorted by lo with a running max of hi, so a point is in the list exactly
/// when that running max, taken over intervals starting at or before it,
/// lies beyond it.
inline Rational kfold_measure(const Window& w, const std::vector<std::vector<Interval>>& sets, std::size_t m) {
    std::vector<Rational> cuts{w.lo, w.hi};
    struct Sorted {
        std::vector<Rational> los;
        std::vector<Rational> reach;  // max hi over the first i+1 intervals
    };
    std::vector<Sorted> sorted;
    for (const auto& s : sets) {
        auto ivs = s;
        std::sort(ivs.begin(), ivs.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
        Sorted out;
        for (const auto& iv : ivs) {
            cuts.push_back(std::clamp(iv.lo, w.lo, w.hi));
            cuts.push_back(std::clamp(iv.hi, w.lo, w.hi));
            out.los.push_back(iv.lo);
            out.reach.push_back(out.reach.empty() ? iv.hi : std::max(out.reach.back(), iv.hi));
        }
        sorted.push_back(std::move(out));
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    Rational total;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        Rational mid = (cuts[i] + cuts[i + 1]) / Rational(2);
        std::size_t hits = 0;
        for (const auto& s : sorted) {
            auto it = std::upper_bound(s.los.begin(), s.los.end(), mid);
            if (it == s.los.begin()) continue;
            if (mid < s.reach[static_cast<std::size_t>(it - s.los.begin()) - 1]) ++hits;
        }
        if (hits >= m) total += cuts[i + 1] - cuts[i];
    }
    return total;
}

/// Copies a union's intervals onto a raw list.
inline void append(std::vector<Interval>& raw, const IntervalUnion& u) {
    raw.insert(raw.end(), u.intervals().begin(), u.intervals().end());
}

inline std::vector<std::vector<Interval>> raw(const std::vector<IntervalUnion>& sets) {
    std::vector<std::vector<Interval>> out;
    for (const auto& s : sets) out.push_back(s.intervals());
    return out;
}

/// Random interval list in [0,1) with denominators up to `den`.
inline std::vector<Interval> random_intervals(std::mt19937_64& rng, int max_count, std::int64_t den) {
    std::uniform_int_distribution<int> count(0, max_count);
    std::uniform_int_distribution<std::int64_t> pos(0, den);
    std::vector<Interval> out;
    int c = count(rng);
    for (int i = 0; i < c; ++i) {
        std::int64_t a = pos(rng), b = pos(rng);
        if (a > b) std::swap(a, b);
        out.push_back({Rational(a, den), Rational(b, den)});
    }
    return out;
}

/// Members of an AP selection written out block by block.
inline std::vector<Natural> ap_members(const std::vector<Natural>& boundaries, const std::vector<Natural>& choices) {
    std::vector<Natural> out;
    for (std::size_t k = 1; k < boundaries.size(); ++k) {
        for (Natural n = boundaries[k - 1] + choices[k - 1]; n < boundaries[k]; n += k) out.push_back(n);
    }
    return out;
}

inline Natural count_below(const std::vector<Natural>& sorted, Natural n) {
    return static_cast<Natural>(std::lower_bound(sorted.begin(), sorted.end(), n) - sorted.begin());
}

}  // namespace oracle
