#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "limits.hpp"
#include "rational.hpp"

namespace density_sieve {

using Natural = std::uint64_t;
inline constexpr Natural kNoMember = std::numeric_limits<Natural>::max();

namespace detail {

inline Natural isqrt(Natural x) {
    auto r = static_cast<Natural>(std::sqrt(static_cast<long double>(x)));
    while (static_cast<unsigned __int128>(r) * r > x) --r;
    while (static_cast<unsigned __int128>(r + 1) * (r + 1) <= x) ++r;
    return r;
}

inline Natural ceil_sqrt(Natural x) {
    Natural r = isqrt(x);
    return r * r == x ? r : r + 1;
}

// Number of x in [0, h) with x = r (mod d), 0 <= r < d.
inline Natural count_class_below(Natural h, Natural r, Natural d) {
    return h > r ? (h - r - 1) / d + 1 : 0;
}

// A density bound p/q with 64-bit parts, compared without rounding.
struct Ratio {
    Natural p = 0;
    Natural q = 1;

    static Ratio from(const Rational& r) {
        if (r.sign() <= 0) throw SpecError("density bound must be positive, got " + r.str());
        auto n = r.numerator(), d = r.denominator();
        if (n > std::numeric_limits<Natural>::max() || d > std::numeric_limits<Natural>::max()) {
            throw SpecError("density bound " + r.str() + " has parts beyond 64 bits");
        }
        return {n.convert_to<Natural>(), d.convert_to<Natural>()};
    }
    // count / n <= p / q
    bool admits(Natural count, Natural n) const {
        return static_cast<unsigned __int128>(count) * q <= static_cast<unsigned __int128>(p) * n;
    }
};

}  // namespace detail

struct IndexNode;

/// Finitely presented subset of the naturals. Immutable; copies share the
/// underlying presentation.
class IndexSet {
public:
    /// Per-block arithmetic-progression selection: block k (1-based) is
    /// [boundaries[k-1], boundaries[k]) and contributes the residue class
    /// choices[k-1] of difference k.
    struct APSelection {
        std::vector<Natural> boundaries;
        std::vector<Natural> choices;
        std::vector<Natural> cumulative;  // members below boundaries[k]

        std::size_t depth() const { return choices.size(); }
        Natural end() const { return boundaries.back(); }
        // 1-based block containing n; requires n < end().
        std::size_t block_of(Natural n) const {
            return static_cast<std::size_t>(std::upper_bound(boundaries.begin(), boundaries.end(), n) -
                                            boundaries.begin());
        }
        Natural block_start_member(std::size_t k) const { return boundaries[k - 1] + choices[k - 1]; }
    };
    struct ExplicitFinite {
        std::vector<Natural> members;  // sorted, unique
    };
    /// { i^2 + shift : i >= 0 }
    struct ShiftedSquares {
        Natural shift = 0;
    };
    /// { 2^a : a >= 0 }
    struct PowersOfTwo {};
    /// Union over parts of (set \ [0, cutoff)); cutoffs strictly increasing.
    struct TailUnion {
        std::vector<std::pair<IndexSet, Natural>> parts;
        // (t, rho): density <= rho for every n >= t, certified by construction.
        std::vector<std::pair<Natural, Rational>> certified;
    };

    IndexSet();  // the empty set

    static IndexSet ap_selection(std::vector<Natural> boundaries, std::vector<Natural> choices);
    static IndexSet finite(std::vector<Natural> members);
    static IndexSet empty() { return finite({}); }
    static IndexSet squares(Natural shift = 0);
    static IndexSet powers_of_two();
    static IndexSet tail_union(std::vector<std::pair<IndexSet, Natural>> parts,
                               std::vector<std::pair<Natural, Rational>> certified = {});

    const IndexNode& node() const { return *node_; }

    template <class T>
    const T* as() const;

private:
    explicit IndexSet(std::shared_ptr<const IndexNode> n) : node_(std::move(n)) {}
    std::shared_ptr<const IndexNode> node_;
};

struct IndexNode {
    using Variant = std::variant<IndexSet::APSelection, IndexSet::ExplicitFinite, IndexSet::ShiftedSquares,
                                 IndexSet::PowersOfTwo, IndexSet::TailUnion>;
    Variant v;
    // Non-tail leaves of a TailUnion with their effective cutoffs.
    std::vector<std::pair<IndexSet, Natural>> leaves;
};

template <class T>
const T* IndexSet::as() const {
    return std::get_if<T>(&node_->v);
}

inline IndexSet IndexSet::ap_selection(std::vector<Natural> boundaries, std::vector<Natural> choices) {
    if (boundaries.empty() || boundaries.front() != 0) throw SpecError("AP selection boundaries must start at 0");
    if (boundaries.size() != choices.size() + 1) {
        throw SpecError("AP selection needs exactly one choice per block");
    }
    APSelection ap{std::move(boundaries), std::move(choices), {}};
    ap.cumulative.assign(ap.boundaries.size(), 0);
    for (std::size_t k = 1; k < ap.boundaries.size(); ++k) {
        if (ap.boundaries[k] <= ap.boundaries[k - 1]) throw SpecError("AP selection boundaries must increase");
        Natural len = ap.boundaries[k] - ap.boundaries[k - 1];
        if (len % k != 0) {
            throw SpecError("block " + std::to_string(k) + " length " + std::to_string(len) +
                            " is not divisible by " + std::to_string(k));
        }
        if (ap.choices[k - 1] >= k) {
            throw SpecError("choice for block " + std::to_string(k) + " must be below " + std::to_string(k));
        }
        ap.cumulative[k] = ap.cumulative[k - 1] + len / k;
    }
    return IndexSet(std::make_shared<const IndexNode>(IndexNode{std::move(ap), {}}));
}

inline IndexSet::IndexSet() : IndexSet(empty()) {}

inline IndexSet IndexSet::finite(std::vector<Natural> members) {
    std::sort(members.begin(), members.end());
    members.erase(std::unique(members.begin(), members.end()), members.end());
    return IndexSet(std::make_shared<const IndexNode>(IndexNode{ExplicitFinite{std::move(members)}, {}}));
}

inline IndexSet IndexSet::squares(Natural shift) {
    return IndexSet(std::make_shared<const IndexNode>(IndexNode{ShiftedSquares{shift}, {}}));
}

inline IndexSet IndexSet::powers_of_two() {
    return IndexSet(std::make_shared<const IndexNode>(IndexNode{PowersOfTwo{}, {}}));
}

inline IndexSet IndexSet::tail_union(std::vector<std::pair<IndexSet, Natural>> parts,
                                     std::vector<std::pair<Natural, Rational>> certified) {
    for (std::size_t i = 1; i < parts.size(); ++i) {
        if (parts[i].second <= parts[i - 1].second) throw SpecError("tail union cutoffs must strictly increase");
    }
    IndexNode node{TailUnion{parts, std::move(certified)}, {}};
    for (const auto& [set, cutoff] : parts) {
        if (set.as<TailUnion>()) {
            for (const auto& [leaf, c] : set.node().leaves) node.leaves.emplace_back(leaf, std::max(cutoff, c));
        } else {
            node.leaves.emplace_back(set, cutoff);
        }
    }
    return IndexSet(std::make_shared<const IndexNode>(std::move(node)));
}

// ---------------------------------------------------------------------------
// membership / next_member / prefix_count

inline bool membership(const IndexSet& z, Natural n);
inline Natural next_member(const IndexSet& z, Natural n);
inline Natural prefix_count(const IndexSet& z, Natural n);

namespace detail {

inline bool ap_member(const IndexSet::APSelection& ap, Natural n) {
    if (n >= ap.end()) return false;
    std::size_t k = ap.block_of(n);
    return (n - ap.boundaries[k - 1]) % k == ap.choices[k - 1];
}

inline Natural ap_next(const IndexSet::APSelection& ap, Natural n) {
    if (n >= ap.end()) return kNoMember;
    std::size_t k = ap.block_of(n);
    Natural start = ap.block_start_member(k);
    if (n <= start) return start;
    Natural steps = (n - start + k - 1) / k;
    Natural cand = start + steps * k;
    if (cand < ap.boundaries[k]) return cand;
    return k < ap.depth() ? ap.block_start_member(k + 1) : kNoMember;
}

inline Natural ap_count(const IndexSet::APSelection& ap, Natural n) {
    if (n >= ap.end()) return ap.cumulative.back();
    std::size_t k = ap.block_of(n);
    Natural off = n - ap.boundaries[k - 1];
    Natural xi = ap.choices[k - 1];
    Natural partial = off > xi ? (off - xi - 1) / k + 1 : 0;
    return ap.cumulative[k - 1] + partial;
}

inline Natural squares_next(Natural shift, Natural n) {
    if (n <= shift) return shift;
    Natural i = ceil_sqrt(n - shift);
    unsigned __int128 v = static_cast<unsigned __int128>(i) * i + shift;
    return v >= kNoMember ? kNoMember : static_cast<Natural>(v);
}

inline Natural powers_next(Natural n) {
    if (n <= 1) return 1;
    if (n > (Natural{1} << 63)) return kNoMember;
    return std::bit_ceil(n);
}

// Residue class x = r (mod d) restricted to [lo, hi), or a single point.
struct ClassInRange {
    bool point = false;
    Natural r = 0;  // residue, or the point itself
    Natural d = 1;
};

inline unsigned __int128 mod_inverse(unsigned __int128 a, unsigned __int128 m) {
    // extended Euclid on signed 128-bit values
    __int128 t = 0, new_t = 1;
    __int128 r = static_cast<__int128>(m), new_r = static_cast<__int128>(a % m);
    while (new_r != 0) {
        __int128 q = r / new_r;
        std::tie(t, new_t) = std::make_pair(new_t, t - q * new_t);
        std::tie(r, new_r) = std::make_pair(new_r, r - q * new_r);
    }
    if (t < 0) t += static_cast<__int128>(m);
    return static_cast<unsigned __int128>(t);
}

// Intersection of a class with x = r2 (mod d2) inside [lo, hi).
inline std::optional<ClassInRange> meet(const ClassInRange& c, Natural r2, Natural d2, Natural lo, Natural hi) {
    if (c.point) {
        if (c.r % d2 == r2) return c;
        return std::nullopt;
    }
    Natural g = std::gcd(c.d, d2);
    Natural r1 = c.r;
    Natural diff = r2 >= r1 ? r2 - r1 : r1 - r2;
    if (diff % g != 0) return std::nullopt;
    unsigned __int128 m1 = c.d / g, m2 = d2 / g;
    unsigned __int128 lcm = m1 * d2;
    // x = r1 + d1 * s, with d1 * s = r2 - r1 (mod d2)  =>  s = ((r2-r1)/g) * inv(m1) (mod m2)
    unsigned __int128 s = 0;
    if (m2 > 1) {
        unsigned __int128 delta = ((static_cast<__int128>(r2) - static_cast<__int128>(r1)) / static_cast<__int128>(g) %
                                       static_cast<__int128>(m2) +
                                   static_cast<__int128>(m2)) %
                                  static_cast<__int128>(m2);
        s = delta * mod_inverse(m1, m2) % m2;
    }
    unsigned __int128 x = (static_cast<unsigned __int128>(r1) + static_cast<unsigned __int128>(c.d) * s) % lcm;
    if (lcm > static_cast<unsigned __int128>(hi - lo)) {
        // at most one solution in range
        unsigned __int128 first = lo + ((x + lcm - lo % lcm) % lcm);
        if (first >= hi) return std::nullopt;
        return ClassInRange{true, static_cast<Natural>(first), 1};
    }
    return ClassInRange{false, static_cast<Natural>(x), static_cast<Natural>(lcm)};
}

inline Natural class_count(const ClassInRange& c, Natural lo, Natural hi) {
    if (c.point) return (c.r >= lo && c.r < hi) ? 1 : 0;
    return count_class_below(hi, c.r, c.d) - count_class_below(lo, c.r, c.d);
}

// |union of residue classes within [lo, hi)| by inclusion-exclusion with
// pruning of empty intersections.
inline Natural union_of_classes(const std::vector<std::pair<Natural, Natural>>& classes, Natural lo, Natural hi) {
    __int128 total = 0;
    struct Frame {
        std::size_t next;
        ClassInRange cls;
        int sign;
    };
    std::vector<Frame> stack;
    for (std::size_t i = 0; i < classes.size(); ++i) {
        stack.push_back({i + 1, ClassInRange{false, classes[i].first, classes[i].second}, +1});
        while (!stack.empty()) {
            Frame f = stack.back();
            stack.pop_back();
            Natural c = class_count(f.cls, lo, hi);
            if (c == 0) continue;
            total += f.sign * static_cast<__int128>(c);
            for (std::size_t j = f.next; j < classes.size(); ++j) {
                if (auto m = meet(f.cls, classes[j].first, classes[j].second, lo, hi)) {
                    stack.push_back({j + 1, *m, -f.sign});
                }
            }
        }
    }
    return static_cast<Natural>(total);
}

inline Natural tail_count(const IndexNode& node, Natural n) {
    const auto& leaves = node.leaves;
    std::vector<Natural> cuts{0, n};
    for (const auto& [leaf, cutoff] : leaves) {
        if (cutoff < n) cuts.push_back(cutoff);
        if (const auto* ap = leaf.as<IndexSet::APSelection>()) {
            for (Natural b : ap->boundaries) {
                if (b >= n) break;
                cuts.push_back(b);
            }
        }
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    Natural total = 0;
    std::vector<std::pair<Natural, Natural>> classes;
    std::vector<Natural> sparse;
    for (std::size_t s = 0; s + 1 < cuts.size() && cuts[s] < n; ++s) {
        Natural lo = cuts[s], hi = std::min(cuts[s + 1], n);
        classes.clear();
        sparse.clear();
        for (const auto& [leaf, cutoff] : leaves) {
            if (cutoff > lo) continue;
            if (const auto* ap = leaf.as<IndexSet::APSelection>()) {
                if (lo >= ap->end()) continue;
                std::size_t k = ap->block_of(lo);
                classes.emplace_back(ap->block_start_member(k) % k, k);
            }
        }
        for (const auto& [leaf, cutoff] : leaves) {
            if (cutoff > lo || leaf.as<IndexSet::APSelection>()) continue;
            for (Natural x = next_member(leaf, lo); x < hi; x = next_member(leaf, x + 1)) {
                bool covered = std::any_of(classes.begin(), classes.end(),
                                           [&](const auto& c) { return x % c.second == c.first; });
                if (!covered) sparse.push_back(x);
            }
        }
        std::sort(sparse.begin(), sparse.end());
        sparse.erase(std::unique(sparse.begin(), sparse.end()), sparse.end());
        total += union_of_classes(classes, lo, hi) + sparse.size();
    }
    return total;
}

}  // namespace detail

inline bool membership(const IndexSet& z, Natural n) {
    return std::visit(
        [&](const auto& v) -> bool {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, IndexSet::APSelection>) {
                return detail::ap_member(v, n);
            } else if constexpr (std::is_same_v<T, IndexSet::ExplicitFinite>) {
                return std::binary_search(v.members.begin(), v.members.end(), n);
            } else if constexpr (std::is_same_v<T, IndexSet::ShiftedSquares>) {
                if (n < v.shift) return false;
                Natural r = detail::isqrt(n - v.shift);
                return r * r == n - v.shift;
            } else if constexpr (std::is_same_v<T, IndexSet::PowersOfTwo>) {
                return std::has_single_bit(n);
            } else {
                for (const auto& [leaf, cutoff] : z.node().leaves) {
                    if (cutoff <= n && membership(leaf, n)) return true;
                }
                return false;
            }
        },
        z.node().v);
}

/// Smallest member >= n, or kNoMember.
inline Natural next_member(const IndexSet& z, Natural n) {
    return std::visit(
        [&](const auto& v) -> Natural {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, IndexSet::APSelection>) {
                return detail::ap_next(v, n);
            } else if constexpr (std::is_same_v<T, IndexSet::ExplicitFinite>) {
                auto it = std::lower_bound(v.members.begin(), v.members.end(), n);
                return it == v.members.end() ? kNoMember : *it;
            } else if constexpr (std::is_same_v<T, IndexSet::ShiftedSquares>) {
                return detail::squares_next(v.shift, n);
            } else if constexpr (std::is_same_v<T, IndexSet::PowersOfTwo>) {
                return detail::powers_next(n);
            } else {
                Natural best = kNoMember;
                for (const auto& [leaf, cutoff] : z.node().leaves) {
                    best = std::min(best, next_member(leaf, std::max(n, cutoff)));
                }
                return best;
            }
        },
        z.node().v);
}

/// |z ∩ [0, n)|, exactly.
inline Natural prefix_count(const IndexSet& z, Natural n) {
    return std::visit(
        [&](const auto& v) -> Natural {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, IndexSet::APSelection>) {
                return detail::ap_count(v, n);
            } else if constexpr (std::is_same_v<T, IndexSet::ExplicitFinite>) {
                return static_cast<Natural>(std::lower_bound(v.members.begin(), v.members.end(), n) -
                                            v.members.begin());
            } else if constexpr (std::is_same_v<T, IndexSet::ShiftedSquares>) {
                return n <= v.shift ? 0 : detail::ceil_sqrt(n - v.shift);
            } else if constexpr (std::is_same_v<T, IndexSet::PowersOfTwo>) {
                return n <= 1 ? 0 : static_cast<Natural>(std::bit_width(n - 1));
            } else {
                return detail::tail_count(z.node(), n);
            }
        },
        z.node().v);
}

/// Members in [lo, hi), ascending.
inline std::vector<Natural> enumerate(const IndexSet& z, Natural lo, Natural hi) {
    std::vector<Natural> out;
    for (Natural x = next_member(z, lo); x < hi; x = next_member(z, x + 1)) {
        out.push_back(x);
        if (x == kNoMember - 1) break;
    }
    return out;
}

inline Rational density_at(const IndexSet& z, Natural n) {
    if (n == 0) throw SpecError("density_at needs n >= 1");
    return Rational(BigInt(prefix_count(z, n)), BigInt(n));
}

// ---------------------------------------------------------------------------
// Density envelopes and certified thresholds

/// Envelope: returns t such that prefix_count(z, n) / n <= delta for every
/// n >= t. Sound for every variant; may be loose.
inline Natural density_envelope(const IndexSet& z, const Rational& delta,
                                std::uint64_t iteration_cap = default_iteration_cap()) {
    if (delta.sign() <= 0) throw SpecError("density bound must be positive, got " + delta.str());
    if (delta >= Rational(1)) return 1;
    auto finite_route = [&](Natural total) -> Natural {
        BigInt t = (Rational(BigInt(total), 1) / delta).ceil();
        if (t > std::numeric_limits<Natural>::max() - 1) throw BudgetError("density envelope overflows 64 bits");
        return std::max<Natural>(1, t.convert_to<Natural>());
    };
    return std::visit(
        [&](const auto& v) -> Natural {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, IndexSet::APSelection>) {
                // Past a full block K the density is at most D_K + 1/(K+1) + 1/N_K.
                Natural best = finite_route(v.cumulative.back());
                if (v.depth() > iteration_cap) throw BudgetError("AP selection depth exceeds iteration cap");
                for (std::size_t k = 1; k <= v.depth(); ++k) {
                    Natural nk = v.boundaries[k];
                    if (nk >= best) break;
                    Rational bound = Rational(BigInt(v.cumulative[k]), BigInt(nk)) +
                                     Rational(BigInt(1), BigInt(k + 1)) + Rational(BigInt(1), BigInt(nk));
                    if (bound <= delta) {
                        best = nk;
                        break;
                    }
                }
                return best;
            } else if constexpr (std::is_same_v<T, IndexSet::ExplicitFinite>) {
                return finite_route(v.members.size());
            } else if constexpr (std::is_same_v<T, IndexSet::ShiftedSquares>) {
                // count(n) <= sqrt(n) + 1 <= delta * n once sqrt(n) >= 1/delta + 1
                BigInt root = (Rational(1) / delta).ceil() + 1;
                BigInt t = root * root;
                if (t > std::numeric_limits<Natural>::max() - 1) throw BudgetError("squares envelope overflows 64 bits");
                return t.convert_to<Natural>();
            } else if constexpr (std::is_same_v<T, IndexSet::PowersOfTwo>) {
                // On [2^a, 2^(a+1)) at most a+1 members; (a+1)/2^a is nonincreasing.
                for (unsigned a = 0; a < 63; ++a) {
                    if (Rational(static_cast<std::int64_t>(a + 1)) <= delta * Rational(BigInt(1) << a, BigInt(1))) {
                        return Natural{1} << a;
                    }
                }
                throw BudgetError("powers-of-two envelope search exceeded 2^63");
            } else {
                std::optional<Natural> best;
                for (const auto& [t, rho] : v.certified) {
                    if (rho <= delta) {
                        best = best ? std::min(*best, t) : t;
                    }
                }
                // Union bound over the leaves.
                const auto& leaves = z.node().leaves;
                if (leaves.empty()) return Natural{1};
                Rational share = delta / Rational(static_cast<std::int64_t>(leaves.size()));
                Natural generic = 1;
                for (const auto& [leaf, cutoff] : leaves) {
                    generic = std::max(generic, density_envelope(leaf, share, iteration_cap));
                }
                return best ? std::min(*best, generic) : generic;
            }
        },
        z.node().v);
}

/// Largest n in [lo, hi] with prefix_count(z, n) / n > delta, if any.
/// Exact: ranges are discarded only when count(hi) <= delta * lo, which
/// bounds every n inside them; small ranges are walked point by point.
inline std::optional<Natural> last_density_violation(const IndexSet& z, Natural lo, Natural hi, const Rational& delta) {
    if (lo == 0) lo = 1;
    if (lo > hi) return std::nullopt;
    auto bound = detail::Ratio::from(delta);
    constexpr Natural kWalk = 256;
    struct Range {
        Natural lo, hi;
    };
    std::vector<Range> stack{{lo, hi}};
    while (!stack.empty()) {
        Range r = stack.back();
        stack.pop_back();
        Natural top = prefix_count(z, r.hi);
        if (bound.admits(top, r.lo)) continue;
        if (r.hi - r.lo < kWalk) {
            // walk downward from hi using membership deltas
            Natural count = top;
            for (Natural n = r.hi;; --n) {
                if (!bound.admits(count, n)) return n;
                if (n == r.lo) break;
                if (membership(z, n - 1)) --count;
            }
            continue;
        }
        Natural mid = r.lo + (r.hi - r.lo) / 2;
        // right half on top of the stack so it is searched first
        stack.push_back({r.lo, mid});
        stack.push_back({mid + 1, r.hi});
    }
    return std::nullopt;
}

/// True iff density <= delta at every n in [lo, hi].
inline bool density_scan_passes(const IndexSet& z, Natural lo, Natural hi, const Rational& delta) {
    return !last_density_violation(z, lo, hi, delta).has_value();
}

inline constexpr Natural kScanFactor = 10;

/// Smallest t such that density_at(z, n) <= delta for all n >= t, given the
/// envelope's certificate point: everything from the envelope point on is
/// covered by the envelope, everything below it by an exact scan.
inline Natural density_threshold(const IndexSet& z, const Rational& delta,
                                 std::uint64_t iteration_cap = default_iteration_cap()) {
    Natural certificate = density_envelope(z, delta, iteration_cap);
    Natural t = 1;
    if (certificate > 1) {
        if (auto last = last_density_violation(z, 1, certificate - 1, delta)) t = *last + 1;
    }
    Natural check_hi = t > kNoMember / kScanFactor ? kNoMember - 1 : t * kScanFactor;
    if (!density_scan_passes(z, t, check_hi, delta)) {
        throw MathError("density envelope is unsound: scan above threshold " + std::to_string(t) + " failed");
    }
    return t;
}

// ---------------------------------------------------------------------------
// JSON: {"ap": {"blocks": [...], "choices": [...]}}, {"finite": [...]},
// {"tails": [[set, cutoff], ...]}, {"squares": {"shift": j}}, {"powers_of_two": {}}

inline nlohmann::json to_json(const IndexSet& z) {
    return std::visit(
        [&](const auto& v) -> nlohmann::json {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, IndexSet::APSelection>) {
                return {{"ap", {{"blocks", v.boundaries}, {"choices", v.choices}}}};
            } else if constexpr (std::is_same_v<T, IndexSet::ExplicitFinite>) {
                return {{"finite", v.members}};
            } else if constexpr (std::is_same_v<T, IndexSet::ShiftedSquares>) {
                return {{"squares", {{"shift", v.shift}}}};
            } else if constexpr (std::is_same_v<T, IndexSet::PowersOfTwo>) {
                return {{"powers_of_two", nlohmann::json::object()}};
            } else {
                nlohmann::json arr = nlohmann::json::array();
                for (const auto& [set, cutoff] : v.parts) arr.push_back(nlohmann::json::array({to_json(set), cutoff}));
                return {{"tails", std::move(arr)}};
            }
        },
        z.node().v);
}

inline IndexSet index_set_from_json(const nlohmann::json& j) {
    auto naturals = [](const nlohmann::json& a, const char* what) {
        if (!a.is_array()) throw SpecError(std::string(what) + " must be an array of naturals");
        std::vector<Natural> out;
        for (const auto& e : a) {
            if (!e.is_number_unsigned() && !(e.is_number_integer() && e.get<std::int64_t>() >= 0)) {
                throw SpecError(std::string(what) + " must contain only naturals");
            }
            out.push_back(e.get<Natural>());
        }
        return out;
    };
    if (!j.is_object() || j.size() != 1) throw SpecError("index set JSON must be a single-key tagged object");
    const auto& [tag, body] = *j.items().begin();
    if (tag == "ap") {
        if (!body.is_object() || !body.contains("blocks") || !body.contains("choices")) {
            throw SpecError("ap index set needs 'blocks' and 'choices'");
        }
        return IndexSet::ap_selection(naturals(body["blocks"], "ap.blocks"), naturals(body["choices"], "ap.choices"));
    }
    if (tag == "finite") return IndexSet::finite(naturals(body, "finite"));
    if (tag == "squares") {
        Natural shift = 0;
        if (body.is_object() && body.contains("shift")) shift = naturals(nlohmann::json::array({body["shift"]}), "shift")[0];
        return IndexSet::squares(shift);
    }
    if (tag == "powers_of_two") return IndexSet::powers_of_two();
    if (tag == "tails") {
        if (!body.is_array()) throw SpecError("tails must be an array of [set, cutoff] pairs");
        std::vector<std::pair<IndexSet, Natural>> parts;
        for (const auto& p : body) {
            if (!p.is_array() || p.size() != 2) throw SpecError("tails entries must be [set, cutoff] pairs");
            parts.emplace_back(index_set_from_json(p[0]), naturals(nlohmann::json::array({p[1]}), "cutoff")[0]);
        }
        return IndexSet::tail_union(std::move(parts));
    }
    throw SpecError("unknown index set kind '" + tag + "'");
}

}  // namespace density_sieve
