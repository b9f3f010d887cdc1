#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "index_sets.hpp"
#include "limits.hpp"
#include "rational.hpp"

namespace density_sieve {

/// Clopen set of all infinite binary sequences extending `prefix`.
struct Cylinder {
    std::string prefix;  // characters '0' / '1'

    bool extends(const Cylinder& other) const { return prefix.starts_with(other.prefix); }
    bool disjoint_from(const Cylinder& other) const { return !extends(other) && !other.extends(*this); }
    bool contains(const std::string& bits) const { return bits.starts_with(prefix); }
};

/// Blocks of cylinders on Cantor space. Block k (1-based) is
/// sets[boundaries[k-1] .. boundaries[k]); child_ranges[k-1][i] is the index
/// range [t, s] of the children in block k+1 of parent boundaries[k-1] + i.
struct CantorBlockSystem {
    std::vector<Natural> boundaries;
    std::vector<Cylinder> sets;
    std::vector<std::vector<std::pair<Natural, Natural>>> child_ranges;

    std::size_t depth() const { return boundaries.empty() ? 0 : boundaries.size() - 1; }
    Natural block_start(std::size_t k) const { return boundaries[k - 1]; }
    Natural block_end(std::size_t k) const { return boundaries[k]; }
    std::size_t block_of(Natural n) const {
        return static_cast<std::size_t>(std::upper_bound(boundaries.begin(), boundaries.end(), n) -
                                        boundaries.begin());
    }
    std::size_t bit_depth() const {
        std::size_t d = 0;
        for (const auto& c : sets) d = std::max(d, c.prefix.size());
        return d;
    }
};

inline constexpr std::size_t kMaxCantorDepth = 6;
inline constexpr Natural kMaxCylinders = Natural{1} << 22;

/// Children per parent: the smallest power of two >= t + 1, which makes
/// s = t + count - 1 >= 2t.
inline Natural cantor_child_count(Natural t) { return std::bit_ceil(t + 1); }

inline CantorBlockSystem build_cantor_system(std::size_t depth, std::size_t max_depth = kMaxCantorDepth,
                                             Natural max_cylinders = kMaxCylinders) {
    if (depth == 0) throw SpecError("Cantor system depth must be at least 1");
    if (depth > max_depth) {
        throw SpecError("Cantor system depth " + std::to_string(depth) + " exceeds the cap of " +
                        std::to_string(max_depth));
    }
    CantorBlockSystem sys;
    sys.boundaries = {0, 1};
    sys.sets.push_back({""});
    for (std::size_t k = 1; k < depth; ++k) {
        // Size the next block before materializing it.
        std::vector<std::pair<Natural, Natural>> ranges;
        Natural t = sys.boundaries[k];
        for (Natural parent = sys.boundaries[k - 1]; parent < sys.boundaries[k]; ++parent) {
            Natural count = cantor_child_count(t);
            if (count > max_cylinders || t + count > max_cylinders) {
                throw BudgetError("Cantor system of depth " + std::to_string(depth) + " needs more than " +
                                  std::to_string(max_cylinders) + " cylinders");
            }
            ranges.emplace_back(t, t + count - 1);
            t += count;
        }
        for (std::size_t i = 0; i < ranges.size(); ++i) {
            const std::string base = sys.sets[sys.boundaries[k - 1] + i].prefix;
            auto [first, last] = ranges[i];
            Natural count = last - first + 1;
            int bits = std::countr_zero(count);
            for (Natural c = 0; c < count; ++c) {
                std::string suffix(static_cast<std::size_t>(bits), '0');
                for (int b = 0; b < bits; ++b) {
                    if ((c >> (bits - 1 - b)) & 1) suffix[static_cast<std::size_t>(b)] = '1';
                }
                sys.sets.push_back({base + suffix});
            }
        }
        sys.child_ranges.push_back(std::move(ranges));
        sys.boundaries.push_back(t);
    }
    return sys;
}

struct PropertyResult {
    std::string name;
    bool passed = true;
    std::string witness;  // first counterwitness when failed
};

namespace detail {

inline bool valid_prefix(const std::string& p) {
    return std::all_of(p.begin(), p.end(), [](char c) { return c == '0' || c == '1'; });
}

inline PropertyResult check_partition(const CantorBlockSystem& sys) {
    PropertyResult r{"partition", true, ""};
    auto fail = [&](std::string why) {
        r.passed = false;
        r.witness = std::move(why);
        return r;
    };
    if (sys.boundaries.size() < 2 || sys.boundaries.front() != 0) return fail("boundaries must start at 0");
    for (std::size_t k = 1; k < sys.boundaries.size(); ++k) {
        if (sys.boundaries[k] <= sys.boundaries[k - 1]) return fail("boundaries not strictly increasing at " + std::to_string(k));
    }
    if (sys.sets.size() != sys.boundaries.back()) {
        return fail("expected " + std::to_string(sys.boundaries.back()) + " cylinders, found " +
                    std::to_string(sys.sets.size()));
    }
    for (std::size_t k = 1; k <= sys.depth(); ++k) {
        std::vector<std::pair<std::string, Natural>> block;
        std::size_t longest = 0;
        for (Natural n = sys.block_start(k); n < sys.block_end(k); ++n) {
            if (!valid_prefix(sys.sets[n].prefix)) return fail("U_" + std::to_string(n) + " has a non-binary prefix");
            block.emplace_back(sys.sets[n].prefix, n);
            longest = std::max(longest, sys.sets[n].prefix.size());
        }
        // In sorted order an overlapping pair is always adjacent.
        std::sort(block.begin(), block.end());
        for (std::size_t i = 1; i < block.size(); ++i) {
            if (block[i].first.starts_with(block[i - 1].first)) {
                return fail("block " + std::to_string(k) + ": U_" + std::to_string(block[i - 1].second) + " ('" +
                            block[i - 1].first + "') and U_" + std::to_string(block[i].second) + " ('" +
                            block[i].first + "') overlap");
            }
        }
        // Disjoint cylinders cover everything iff sum 2^-|p| = 1.
        BigInt kraft = 0;
        for (const auto& [p, n] : block) kraft += BigInt(1) << (longest - p.size());
        BigInt full = BigInt(1) << longest;
        if (kraft != full) {
            return fail("block " + std::to_string(k) + " covers measure " + Rational(kraft, full).str() + ", not 1");
        }
    }
    return r;
}

inline PropertyResult check_refinement(const CantorBlockSystem& sys) {
    PropertyResult r{"refinement", true, ""};
    auto fail = [&](std::string why) {
        r.passed = false;
        r.witness = std::move(why);
        return r;
    };
    if (sys.child_ranges.size() + 1 != sys.depth()) return fail("child ranges must be given for blocks 1..K-1");
    for (std::size_t k = 1; k < sys.depth(); ++k) {
        const auto& ranges = sys.child_ranges[k - 1];
        if (ranges.size() != sys.block_end(k) - sys.block_start(k)) {
            return fail("block " + std::to_string(k) + " has " + std::to_string(ranges.size()) +
                        " child ranges for " + std::to_string(sys.block_end(k) - sys.block_start(k)) + " parents");
        }
        Natural expect = sys.block_start(k + 1);
        for (std::size_t i = 0; i < ranges.size(); ++i) {
            Natural parent = sys.block_start(k) + i;
            auto [t, s] = ranges[i];
            if (t != expect || s < t || s >= sys.block_end(k + 1)) {
                return fail("children of U_" + std::to_string(parent) + " are (" + std::to_string(t) + ", " +
                            std::to_string(s) + "), expected to start at " + std::to_string(expect));
            }
            for (Natural c = t; c <= s && c < sys.sets.size(); ++c) {
                if (!sys.sets[c].extends(sys.sets[parent])) {
                    return fail("U_" + std::to_string(c) + " does not refine its parent U_" + std::to_string(parent));
                }
            }
            expect = s + 1;
        }
        if (expect != sys.block_end(k + 1)) {
            return fail("block " + std::to_string(k + 1) + " has cylinders that are nobody's child");
        }
    }
    return r;
}

inline PropertyResult check_growth(const CantorBlockSystem& sys) {
    PropertyResult r{"growth", true, ""};
    for (const auto& ranges : sys.child_ranges) {
        for (auto [t, s] : ranges) {
            if (s < 2 * t) {
                r.passed = false;
                r.witness = "(t, s) = (" + std::to_string(t) + ", " + std::to_string(s) + ") has s < 2t";
                return r;
            }
        }
    }
    return r;
}

}  // namespace detail

/// Partition, refinement and growth (s >= 2t), in that order.
inline std::vector<PropertyResult> validate_system(const CantorBlockSystem& sys) {
    return {detail::check_partition(sys), detail::check_refinement(sys), detail::check_growth(sys)};
}

/// Finite bit string; the continuation past it is all zeros.
struct CantorPoint {
    std::string bits;
};

/// |{ n in z, n < N_K : point in U_n }|
inline Natural coverage_count(const CantorBlockSystem& sys, const CantorPoint& point, const IndexSet& z) {
    std::string bits = point.bits;
    if (bits.size() < sys.bit_depth()) bits.resize(sys.bit_depth(), '0');
    Natural count = 0;
    for (Natural n : enumerate(z, 0, sys.boundaries.back())) {
        if (sys.sets[n].contains(bits)) ++count;
    }
    return count;
}

struct DefeatResult {
    CantorPoint point;
    std::vector<Natural> chain;  // one index per block from start_block on
    Natural n0 = 0;
    std::size_t start_block = 0;
    Natural coverage = 0;
    Natural hits_from_start = 0;  // hits in blocks >= start_block; always 0
    Natural escape_checks = 0;
};

inline DefeatResult defeat(const CantorBlockSystem& sys, const IndexSet& z,
                           std::uint64_t iteration_cap = default_iteration_cap()) {
    DefeatResult r;
    r.n0 = density_threshold(z, Rational(1, 2), iteration_cap);
    for (std::size_t k = 1; k <= sys.depth(); ++k) {
        if (sys.block_start(k) >= r.n0) {
            r.start_block = k;
            break;
        }
    }
    if (r.start_block == 0) {
        throw MathError("Cantor system of depth " + std::to_string(sys.depth()) + " has no block starting at or above n0 = " +
                        std::to_string(r.n0) + "; build a deeper system");
    }

    // Every child range above n0 escapes z: z holds at most (s+1)/2 of [0, s],
    // fewer than the s - t + 1 >= (s+2)/2 children.
    for (std::size_t k = 1; k < sys.depth(); ++k) {
        for (auto [t, s] : sys.child_ranges[k - 1]) {
            if (t < r.n0) continue;
            ++r.escape_checks;
            if (prefix_count(z, s + 1) - prefix_count(z, t) >= s - t + 1) {
                throw MathError("child range (" + std::to_string(t) + ", " + std::to_string(s) +
                                ") lies inside z although it starts above n0 = " + std::to_string(r.n0));
            }
        }
    }

    auto first_outside = [&](Natural lo, Natural hi) -> Natural {
        for (Natural n = lo; n <= hi; ++n) {
            if (!membership(z, n)) return n;
        }
        throw MathError("indices " + std::to_string(lo) + ".." + std::to_string(hi) + " all lie in z");
    };
    Natural current = first_outside(sys.block_start(r.start_block), sys.block_end(r.start_block) - 1);
    r.chain.push_back(current);
    for (std::size_t k = r.start_block; k < sys.depth(); ++k) {
        auto [t, s] = sys.child_ranges[k - 1][current - sys.block_start(k)];
        current = first_outside(t, s);
        r.chain.push_back(current);
    }

    r.point.bits = sys.sets[current].prefix;
    r.point.bits.resize(sys.bit_depth(), '0');
    r.coverage = coverage_count(sys, r.point, z);
    for (Natural n : enumerate(z, sys.block_start(r.start_block), sys.boundaries.back())) {
        if (sys.sets[n].contains(r.point.bits)) ++r.hits_from_start;
    }
    return r;
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json to_json(const CantorBlockSystem& sys) {
    nlohmann::json prefixes = nlohmann::json::array();
    for (const auto& c : sys.sets) prefixes.push_back(c.prefix);
    nlohmann::json ranges = nlohmann::json::array();
    for (const auto& block : sys.child_ranges) {
        nlohmann::json b = nlohmann::json::array();
        for (auto [t, s] : block) b.push_back({t, s});
        ranges.push_back(b);
    }
    return {{"boundaries", sys.boundaries}, {"prefixes", prefixes}, {"child_ranges", ranges}};
}

inline CantorBlockSystem cantor_system_from_json(const nlohmann::json& j) {
    try {
        CantorBlockSystem sys;
        sys.boundaries = j.at("boundaries").get<std::vector<Natural>>();
        for (const auto& p : j.at("prefixes")) sys.sets.push_back({p.get<std::string>()});
        for (const auto& block : j.at("child_ranges")) {
            std::vector<std::pair<Natural, Natural>> b;
            for (const auto& ts : block) b.emplace_back(ts.at(0).get<Natural>(), ts.at(1).get<Natural>());
            sys.child_ranges.push_back(std::move(b));
        }
        return sys;
    } catch (const nlohmann::json::exception& e) {
        throw SpecError(std::string("malformed Cantor system: ") + e.what());
    }
}

inline nlohmann::json to_json(const PropertyResult& p) {
    return {{"property", p.name}, {"passed", p.passed}, {"witness", p.witness}};
}

inline nlohmann::json to_json(const DefeatResult& r) {
    return {{"n0", r.n0},
            {"start_block", r.start_block},
            {"chain", r.chain},
            {"point", r.point.bits},
            {"coverage_count", r.coverage},
            {"hits_from_start", r.hits_from_start},
            {"escape_checks", r.escape_checks}};
}

}  // namespace density_sieve
