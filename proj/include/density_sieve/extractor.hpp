#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cover_family.hpp"
#include "errors.hpp"
#include "index_sets.hpp"
#include "limits.hpp"
#include "measure_sets.hpp"
#include "pideal.hpp"
#include "rational.hpp"
#include "rng.hpp"

namespace density_sieve {

/// Boundaries 0 = N_0 < N_1 < ... < N_K with k | (N_k - N_{k-1}); block k is
/// [N_{k-1}, N_k) and leaves at most epsilon / 2^k of the window uncovered.
struct BlockStructure {
    Rational epsilon;
    std::vector<Natural> boundaries;
    std::vector<Natural> minimal_ends;  // first end meeting the residual target, before padding
    std::vector<Rational> residuals;    // exact uncovered measure of each padded block

    std::size_t depth() const { return residuals.size(); }
    Natural block_start(std::size_t k) const { return boundaries[k - 1]; }
    Natural block_end(std::size_t k) const { return boundaries[k]; }
    Natural block_length(std::size_t k) const { return boundaries[k] - boundaries[k - 1]; }
    Rational target(std::size_t k) const { return epsilon * pow2_inverse(static_cast<unsigned>(k)); }
};

/// Indices stay below 2^63 so every family can address them.
inline constexpr Natural kMaxIndex = Natural{1} << 63;

namespace detail {

inline Rational uncovered(const CoverFamily& f, const IntervalUnion& u) { return f.window().length() - u.measure(); }

// First exclusive end e > start with residual(A_start..A_{e-1}) <= target.
inline Natural minimal_cover_end(const CoverFamily& f, Natural start, const Rational& target,
                                 std::uint64_t iteration_cap, std::size_t k) {
    auto cap_error = [&] {
        return BudgetError("block " + std::to_string(k) + ": residual target " + target.str() +
                           " not reached within the iteration cap of " + std::to_string(iteration_cap) +
                           " (does the family cover almost every point infinitely often?)");
    };
    std::uint64_t iterations = 0;
    if (!f.fast_ranges()) {
        // Linear scan, accumulating the union.
        IntervalUnion acc = IntervalUnion::empty(f.window());
        for (Natural e = start + 1;; ++e) {
            if (++iterations > iteration_cap) throw cap_error();
            acc = unite(acc, f.get(e - 1));
            if (uncovered(f, acc) <= target) return e;
        }
    }
    // Residual is nonincreasing in e: gallop, then bisect. Same answer as the
    // linear scan.
    auto meets = [&](Natural e) {
        if (++iterations > iteration_cap) throw cap_error();
        return uncovered(f, f.range_union(start, e)) <= target;
    };
    Natural lo = start;  // residual(lo) fails (or lo == start)
    Natural step = 1;
    Natural hi;
    for (;;) {
        if (step > kMaxIndex - start) {
            throw BudgetError("block " + std::to_string(k) + ": boundary search passed index 2^63");
        }
        hi = start + step;
        if (meets(hi)) break;
        lo = hi;
        step *= 2;
    }
    while (hi - lo > 1) {
        Natural mid = lo + (hi - lo) / 2;
        if (meets(mid)) hi = mid; else lo = mid;
    }
    return hi;
}

}  // namespace detail

/// Builds K blocks: each block ends at the first index meeting the residual
/// target epsilon/2^k, then is padded up to a multiple of k.
inline BlockStructure build_blocks(const CoverFamily& family, const Rational& epsilon, std::size_t depth,
                                   std::uint64_t iteration_cap = default_iteration_cap()) {
    if (epsilon.sign() <= 0) throw SpecError("epsilon must be positive, got " + epsilon.str());
    if (depth == 0) throw SpecError("depth must be at least 1");
    BlockStructure b;
    b.epsilon = epsilon;
    b.boundaries.push_back(0);
    for (std::size_t k = 1; k <= depth; ++k) {
        Natural start = b.boundaries.back();
        Rational target = b.target(k);
        Natural minimal = detail::minimal_cover_end(family, start, target, iteration_cap, k);
        Natural len = minimal - start;
        Natural padded = (len + k - 1) / k * k;
        if (padded > kMaxIndex - start) {
            throw BudgetError("block " + std::to_string(k) + " passes index 2^63");
        }
        Natural end = start + padded;
        b.minimal_ends.push_back(minimal);
        b.boundaries.push_back(end);
        b.residuals.push_back(detail::uncovered(family, family.range_union(start, end)));
    }
    return b;
}

/// Realized residues xi_k drawn from the counter-based stream.
inline std::vector<Natural> draw_choices(std::size_t depth, std::uint64_t seed) {
    RngStream rng(seed);
    std::vector<Natural> choices;
    for (std::size_t k = 1; k <= depth; ++k) choices.push_back(rng.residue_for_block(k));
    return choices;
}

/// Z = union over k of the progression { N_{k-1} + xi_k + j k } inside block k.
inline IndexSet select_subsequence(const BlockStructure& blocks, std::uint64_t seed) {
    return IndexSet::ap_selection(blocks.boundaries, draw_choices(blocks.depth(), seed));
}

/// The i-th progression of difference k inside block k, as indices.
inline std::vector<Natural> block_progression(const BlockStructure& blocks, std::size_t k, Natural i) {
    std::vector<Natural> out;
    for (Natural n = blocks.block_start(k) + i; n < blocks.block_end(k); n += k) out.push_back(n);
    return out;
}

/// X_eps: intersection of the block unions, exact up to the built depth.
inline IntervalUnion x_epsilon(const CoverFamily& family, const BlockStructure& blocks) {
    IntervalUnion x = IntervalUnion::full(family.window());
    for (std::size_t k = 1; k <= blocks.depth(); ++k) {
        x = intersect(x, family.range_union(blocks.block_start(k), blocks.block_end(k)));
    }
    return x;
}

struct ExtractionCertificate {
    Rational epsilon;
    BlockStructure blocks;
    IntervalUnion x_eps;
    IndexSet z;
    std::uint64_t seed = 0;
    nlohmann::json family;  // descriptor of the family the blocks were built from
};

inline ExtractionCertificate extract(const CoverFamily& family, const Rational& epsilon, std::size_t depth,
                                     std::uint64_t seed, std::uint64_t iteration_cap = default_iteration_cap()) {
    auto blocks = build_blocks(family, epsilon, depth, iteration_cap);
    auto x = x_epsilon(family, blocks);
    auto z = select_subsequence(blocks, seed);
    return {epsilon, std::move(blocks), std::move(x), std::move(z), seed, family.descriptor()};
}

/// Seed used for epsilon = 1/m inside extract_ae.
inline std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t m) { return hash64(seed, m); }

struct AeExtraction {
    IndexSet z;
    std::vector<Natural> cutoffs;
    std::vector<ExtractionCertificate> certificates;  // epsilon = 1, 1/2, ..., 1/m_max
};

/// Runs extract for epsilon = 1/m, m = 1..m_max, and glues the Z_{1/m} with a
/// pseudo-union.
inline AeExtraction extract_ae(const CoverFamily& family, std::size_t depth, std::uint64_t seed, std::size_t m_max,
                               std::uint64_t iteration_cap = default_iteration_cap()) {
    if (m_max == 0) throw SpecError("m_max must be at least 1");
    AeExtraction out{IndexSet::empty(), {}, {}};
    std::vector<IndexSet> parts;
    for (std::size_t m = 1; m <= m_max; ++m) {
        out.certificates.push_back(
            extract(family, Rational(1, static_cast<std::int64_t>(m)), depth, sub_seed(seed, m), iteration_cap));
        parts.push_back(out.certificates.back().z);
    }
    auto pu = pseudo_union(parts, iteration_cap);
    out.z = pu.z;
    out.cutoffs = pu.cutoffs;
    return out;
}

/// Seed used for window m inside extract_sigma_finite.
inline std::uint64_t window_seed(std::uint64_t seed, std::uint64_t m) { return hash64(seed, (std::uint64_t{1} << 32) + m); }

struct SigmaExtraction {
    IndexSet z;
    std::vector<Natural> cutoffs;
    std::vector<AeExtraction> windows;
};

/// Per-window extract_ae, glued by a pseudo-union.
inline SigmaExtraction extract_sigma_finite(const SigmaFiniteFamily& sf, std::size_t depth, std::uint64_t seed,
                                            std::size_t window_count, std::size_t m_max = 2,
                                            std::uint64_t iteration_cap = default_iteration_cap()) {
    if (window_count == 0 || window_count > sf.window_count()) {
        throw SpecError("window_count must be between 1 and " + std::to_string(sf.window_count()));
    }
    SigmaExtraction out{IndexSet::empty(), {}, {}};
    std::vector<IndexSet> parts;
    for (std::size_t m = 0; m < window_count; ++m) {
        out.windows.push_back(extract_ae(sf.restriction(m), depth, window_seed(seed, m + 1), m_max, iteration_cap));
        parts.push_back(out.windows.back().z);
    }
    auto pu = pseudo_union(parts, iteration_cap);
    out.z = pu.z;
    out.cutoffs = pu.cutoffs;
    return out;
}

// ---------------------------------------------------------------------------
// Certificates: JSON and revalidation

inline nlohmann::json to_json(const ExtractionCertificate& c) {
    std::vector<std::string> residuals;
    for (const auto& r : c.blocks.residuals) residuals.push_back(r.str());
    return {{"epsilon", c.epsilon.str()},
            {"depth", c.blocks.depth()},
            {"truncated_at_depth", c.blocks.depth()},
            {"boundaries", c.blocks.boundaries},
            {"minimal_ends", c.blocks.minimal_ends},
            {"residuals", residuals},
            {"seed", c.seed},
            {"z", to_json(c.z)},
            {"x_eps", to_json(c.x_eps)},
            {"family", c.family}};
}

inline ExtractionCertificate certificate_from_json(const nlohmann::json& j) {
    try {
        for (const char* key : {"epsilon", "boundaries", "minimal_ends", "residuals", "seed", "z", "x_eps", "family"}) {
            if (!j.contains(key)) throw SpecError(std::string("certificate is missing '") + key + "'");
        }
        ExtractionCertificate c;
        c.epsilon = Rational::parse(j.at("epsilon").get<std::string>());
        c.blocks.epsilon = c.epsilon;
        c.blocks.boundaries = j.at("boundaries").get<std::vector<Natural>>();
        c.blocks.minimal_ends = j.at("minimal_ends").get<std::vector<Natural>>();
        for (const auto& r : j.at("residuals")) c.blocks.residuals.push_back(Rational::parse(r.get<std::string>()));
        if (c.blocks.boundaries.size() != c.blocks.residuals.size() + 1 ||
            c.blocks.minimal_ends.size() != c.blocks.residuals.size()) {
            throw SpecError("certificate block arrays have inconsistent lengths");
        }
        c.seed = j.at("seed").get<std::uint64_t>();
        c.z = index_set_from_json(j.at("z"));
        c.x_eps = union_from_json(j.at("x_eps"));
        c.family = j.at("family");
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw SpecError(std::string("malformed certificate: ") + e.what());
    }
}

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Recomputes every certificate invariant from the family.
inline std::vector<CheckResult> validate_certificate(const ExtractionCertificate& c, const CoverFamily& family) {
    std::vector<CheckResult> out;
    const auto& b = c.blocks;
    auto add = [&](std::string name, bool ok, std::string detail = {}) {
        out.push_back({std::move(name), ok, std::move(detail)});
    };

    bool divisible = !b.boundaries.empty() && b.boundaries.front() == 0;
    std::string first_bad;
    for (std::size_t k = 1; k <= b.depth() && divisible; ++k) {
        if (b.boundaries[k] <= b.boundaries[k - 1] || b.block_length(k) % k != 0) {
            divisible = false;
            first_bad = "block " + std::to_string(k);
        }
    }
    add("divisibility", divisible, first_bad);
    if (!divisible) return out;

    bool residual_ok = true, minimal_ok = true;
    std::string residual_detail, minimal_detail;
    for (std::size_t k = 1; k <= b.depth(); ++k) {
        Natural start = b.block_start(k);
        Rational r = detail::uncovered(family, family.range_union(start, b.block_end(k)));
        if (r != b.residuals[k - 1] || r > b.target(k)) {
            if (residual_ok) residual_detail = "block " + std::to_string(k) + ": recomputed " + r.str();
            residual_ok = false;
        }
        Natural me = b.minimal_ends[k - 1];
        Natural len = me > start ? me - start : 0;
        bool minimal = me > start && detail::uncovered(family, family.range_union(start, me)) <= b.target(k) &&
                       (me == start + 1 ||
                        detail::uncovered(family, family.range_union(start, me - 1)) > b.target(k)) &&
                       b.block_end(k) == start + (len + k - 1) / k * k;
        if (!minimal) {
            if (minimal_ok) minimal_detail = "block " + std::to_string(k);
            minimal_ok = false;
        }
    }
    add("residual_certificates", residual_ok, residual_detail);
    add("minimal_then_padded", minimal_ok, minimal_detail);

    auto x = x_epsilon(family, b);
    add("x_eps_exact", x == c.x_eps);
    Rational lost = family.window().length() - c.x_eps.measure();
    add("x_eps_measure", lost <= c.epsilon, "uncovered " + lost.str() + " vs epsilon " + c.epsilon.str());

    auto expected = select_subsequence(b, c.seed);
    const auto* got = c.z.as<IndexSet::APSelection>();
    const auto* want = expected.as<IndexSet::APSelection>();
    add("selection_matches_seed",
        got && got->boundaries == want->boundaries && got->choices == want->choices);
    return out;
}

}  // namespace density_sieve
