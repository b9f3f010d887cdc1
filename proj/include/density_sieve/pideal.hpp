#pragma once

#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "index_sets.hpp"
#include "limits.hpp"
#include "rational.hpp"

namespace density_sieve {

/// Diagonal pseudo-union: part m enters from cutoff t_m on, and every n >= t_m
/// has density <= 1/(m+1).
struct PseudoUnion {
    IndexSet z;
    std::vector<Natural> cutoffs;  // t_1 < t_2 < ... < t_M
};

inline Rational diagonal_density(std::size_t m) { return Rational(1, static_cast<std::int64_t>(m + 1)); }

/// Z with Z ∩ [t_m, t_{m+1}) = (Z_1 ∪ ... ∪ Z_m) ∩ [t_m, t_{m+1}). With
/// `certify`, (t_m, 1/(m+1)) is recorded as a density certificate; callers
/// must have verified it.
inline IndexSet diagonal_union(const std::vector<IndexSet>& parts, const std::vector<Natural>& cutoffs, bool certify) {
    if (parts.size() != cutoffs.size()) throw SpecError("need one cutoff per part");
    std::vector<std::pair<IndexSet, Natural>> tails;
    std::vector<std::pair<Natural, Rational>> certified;
    for (std::size_t m = 1; m <= parts.size(); ++m) {
        tails.emplace_back(parts[m - 1], cutoffs[m - 1]);
        if (certify) certified.emplace_back(cutoffs[m - 1], diagonal_density(m));
    }
    return IndexSet::tail_union(std::move(tails), std::move(certified));
}

inline PseudoUnion pseudo_union(const std::vector<IndexSet>& parts,
                                std::uint64_t iteration_cap = default_iteration_cap()) {
    if (parts.empty()) throw SpecError("pseudo_union needs at least one part");
    const std::size_t count = parts.size();

    // Candidate cutoffs from the envelopes: each of the first m parts gets a
    // density budget of 1/((m+1) m).
    std::vector<Natural> cutoffs(count);
    Natural previous = 0;
    for (std::size_t m = 1; m <= count; ++m) {
        Rational budget = Rational(1, static_cast<std::int64_t>((m + 1) * m));
        Natural t = previous + 1;
        for (std::size_t i = 0; i < m; ++i) t = std::max(t, density_envelope(parts[i], budget, iteration_cap));
        cutoffs[m - 1] = t;
        previous = t;
    }

    auto build = [&] { return diagonal_union(parts, cutoffs, true); };

    // Verify each cutoff on [t_m, 10 t_m]; advance and rescan on failure.
    // Advancing only removes members, so earlier passes stay valid.
    IndexSet result = build();
    std::uint64_t rounds = 0;
    for (std::size_t m = 1; m <= count;) {
        Natural t = cutoffs[m - 1];
        Natural hi = t > kNoMember / kScanFactor ? kNoMember - 1 : t * kScanFactor;
        auto bad = last_density_violation(result, t, hi, diagonal_density(m));
        if (!bad) {
            ++m;
            continue;
        }
        if (++rounds > iteration_cap) throw BudgetError("pseudo_union cutoff verification exceeded iteration cap");
        cutoffs[m - 1] = *bad + 1;
        for (std::size_t i = m; i < count; ++i) cutoffs[i] = std::max(cutoffs[i], cutoffs[i - 1] + 1);
        result = build();
    }
    return {result, cutoffs};
}

/// (part \ result) restricted to [0, limit): the finitely many members of a
/// part the pseudo-union leaves out, as seen on that range.
inline std::vector<Natural> missing_members(const IndexSet& part, const IndexSet& result, Natural limit) {
    std::vector<Natural> out;
    for (Natural x : enumerate(part, 0, limit)) {
        if (!membership(result, x)) out.push_back(x);
    }
    return out;
}

struct PseudoUnionCheck {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Almost containment of every part (missing members all below t_m, scanned
/// on [0, limit)), certified density 1/(m+1) on [t_m, 10 t_m], and strictly
/// increasing cutoffs.
inline std::vector<PseudoUnionCheck> verify_pseudo_union(const std::vector<IndexSet>& parts, const PseudoUnion& pu,
                                                         Natural limit) {
    std::vector<PseudoUnionCheck> out;
    bool monotone = pu.cutoffs.size() == parts.size();
    for (std::size_t i = 1; monotone && i < pu.cutoffs.size(); ++i) monotone = pu.cutoffs[i - 1] < pu.cutoffs[i];
    out.push_back({"cutoffs_increasing", monotone, ""});
    if (pu.cutoffs.size() != parts.size()) return out;
    for (std::size_t m = 1; m <= parts.size(); ++m) {
        Natural t = pu.cutoffs[m - 1];
        auto missing = missing_members(parts[m - 1], pu.z, limit);
        bool contained = missing.empty() || missing.back() < t;
        out.push_back({"almost_containment_" + std::to_string(m), contained,
                       std::to_string(missing.size()) + " missing below " + std::to_string(limit) +
                           (missing.empty() ? "" : ", largest " + std::to_string(missing.back())) + ", t_m = " +
                           std::to_string(t)});
        Natural hi = t > kNoMember / kScanFactor ? kNoMember - 1 : t * kScanFactor;
        auto bad = last_density_violation(pu.z, t, hi, diagonal_density(m));
        out.push_back({"density_" + std::to_string(m), !bad,
                       "bound " + diagonal_density(m).str() + " on [" + std::to_string(t) + ", " + std::to_string(hi) +
                           "]" + (bad ? ", violated at n = " + std::to_string(*bad) : "")});
    }
    return out;
}

}  // namespace density_sieve
