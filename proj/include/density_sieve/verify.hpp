#pragma once

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cover_family.hpp"
#include "errors.hpp"
#include "extractor.hpp"
#include "index_sets.hpp"
#include "measure_sets.hpp"
#include "rational.hpp"
#include "rng.hpp"

namespace density_sieve {

/// Upper bound on the intervals materialized by one truncated_residual call.
inline constexpr Natural kDefaultIntervalBudget = 4'000'000;

/// Union of A_n over the chosen progression of block k: n = N_{k-1} + xi_k + j k.
inline IntervalUnion chosen_union(const CoverFamily& family, const BlockStructure& blocks,
                                  const std::vector<Natural>& choices, std::size_t k) {
    return family.progression_union(blocks.block_start(k) + choices[k - 1], k, blocks.block_length(k) / k);
}

/// Sets A_n taken into the chosen unions of blocks j..K.
inline Natural chosen_set_count(const BlockStructure& blocks, std::size_t j, std::size_t last) {
    Natural total = 0;
    for (std::size_t k = j; k <= last; ++k) total += blocks.block_length(k) / k;
    return total;
}

namespace detail {

inline Rational residual_from_choices(const CoverFamily& family, const BlockStructure& blocks,
                                      const IntervalUnion& x_eps, const std::vector<Natural>& choices,
                                      std::size_t j, std::size_t last, std::size_t m, Natural interval_budget) {
    if (j < 1 || j > last || last > blocks.depth()) {
        throw SpecError("need 1 <= j <= K <= depth, got j=" + std::to_string(j) + " K=" + std::to_string(last) +
                        " depth=" + std::to_string(blocks.depth()));
    }
    if (m == 0) return Rational(0);
    Natural needed = chosen_set_count(blocks, j, last);
    if (needed > interval_budget) {
        throw BudgetError("exact residual over blocks " + std::to_string(j) + ".." + std::to_string(last) +
                          " needs the union of " + std::to_string(needed) + " sets, over the interval budget of " +
                          std::to_string(interval_budget));
    }
    std::vector<IntervalUnion> chosen;
    for (std::size_t k = j; k <= last; ++k) chosen.push_back(intersect(chosen_union(family, blocks, choices, k), x_eps));
    auto covered = kfold_region(family.window(), chosen, m);
    return x_eps.measure() - intersect(covered, x_eps).measure();
}

}  // namespace detail

/// Exact measure of points of X_eps lying in fewer than m of the chosen
/// unions of blocks j..K.
inline Rational truncated_residual(const CoverFamily& family, const ExtractionCertificate& cert, std::size_t j,
                                   std::size_t last, std::size_t m, Natural interval_budget = kDefaultIntervalBudget) {
    const auto* ap = cert.z.as<IndexSet::APSelection>();
    if (!ap) throw SpecError("certificate selection is not an AP selection");
    return detail::residual_from_choices(family, cert.blocks, cert.x_eps, ap->choices, j, last, m, interval_budget);
}

/// Borel-Cantelli check over a seed ensemble.
struct BcReport {
    nlohmann::json family;
    Rational epsilon;
    std::size_t depth = 0;
    std::size_t j = 0;
    std::size_t last = 0;
    Rational mu_x_eps;
    Rational bound;          // mu(X_eps) * (j-1)/K
    Rational average;
    Rational variance;       // sample variance, n-1 denominator
    Rational slack_squared;  // 9 * variance / seeds
    double slack = 0;        // sqrt(slack_squared); display only
    bool verdict = false;
    std::vector<std::uint64_t> seeds;
    std::vector<Rational> residuals;
};

inline constexpr std::size_t kMinBcSeeds = 30;

inline BcReport bc_bound_check(const CoverFamily& family, const Rational& epsilon, std::size_t depth, std::size_t j,
                               const std::vector<std::uint64_t>& seeds, Natural interval_budget = kDefaultIntervalBudget,
                               std::uint64_t iteration_cap = default_iteration_cap()) {
    if (seeds.size() < kMinBcSeeds) {
        throw SpecError("bc_bound_check needs at least " + std::to_string(kMinBcSeeds) + " seeds");
    }
    BcReport r;
    r.family = family.descriptor();
    r.epsilon = epsilon;
    r.depth = depth;
    r.j = j;
    r.last = depth;
    r.seeds = seeds;
    // Blocks and X_eps do not depend on the seed.
    auto blocks = build_blocks(family, epsilon, depth, iteration_cap);
    auto x_eps = x_epsilon(family, blocks);
    r.mu_x_eps = x_eps.measure();
    r.bound = r.mu_x_eps * Rational(static_cast<std::int64_t>(j - 1), static_cast<std::int64_t>(depth));
    for (auto seed : seeds) {
        r.residuals.push_back(detail::residual_from_choices(family, blocks, x_eps, draw_choices(depth, seed), j, depth,
                                                            1, interval_budget));
    }
    const Rational n(static_cast<std::int64_t>(seeds.size()));
    Rational sum;
    for (const auto& v : r.residuals) sum += v;
    r.average = sum / n;
    Rational ss;
    for (const auto& v : r.residuals) ss += (v - r.average) * (v - r.average);
    r.variance = ss / (n - Rational(1));
    r.slack_squared = Rational(9) * r.variance / n;
    r.slack = std::sqrt(r.slack_squared.to_double());
    Rational excess = r.average - r.bound;
    r.verdict = excess.sign() <= 0 || excess * excess <= r.slack_squared;
    return r;
}

/// Seeds 0..count-1 mapped through hash64(base, i).
inline std::vector<std::uint64_t> seed_ensemble(std::uint64_t base, std::size_t count) {
    std::vector<std::uint64_t> out;
    for (std::size_t i = 0; i < count; ++i) out.push_back(hash64(base, i));
    return out;
}

struct McStats {
    std::map<Natural, Natural> histogram;  // hit count -> number of points
    Natural points = 0;
    Natural min = 0;
    Natural max = 0;
    Rational mean;
};

/// Uniform sample point i of the window on a 2^-62 grid.
inline Rational sample_point(const Window& w, std::uint64_t seed, std::uint64_t i) {
    return w.at(Rational(BigInt(hash64(seed, i) >> 2), BigInt(1) << 62));
}

/// Hit counts |{ n in z, n < n_max : x in A_n }| for sampled x.
inline McStats monte_carlo_points(const CoverFamily& family, const IndexSet& z, Natural n_max, Natural points,
                                  std::uint64_t seed) {
    McStats s;
    s.points = points;
    Natural total = 0;
    for (Natural i = 0; i < points; ++i) {
        Rational x = sample_point(family.window(), seed, i);
        Natural count = 0;
        for (Natural n : family.hits(x, 0, n_max)) {
            if (membership(z, n)) ++count;
        }
        ++s.histogram[count];
        s.min = i == 0 ? count : std::min(s.min, count);
        s.max = std::max(s.max, count);
        total += count;
    }
    s.mean = points ? Rational(BigInt(total), BigInt(points)) : Rational(0);
    return s;
}

// ---------------------------------------------------------------------------
// Reports

struct Check {
    std::string name;
    bool passed = false;
    nlohmann::json data;
};

struct Report {
    nlohmann::json inputs = nlohmann::json::object();
    std::vector<Check> checks;
    nlohmann::json measurements = nlohmann::json::object();  // values with no pass/fail

    bool all_passed() const {
        for (const auto& c : checks) {
            if (!c.passed) return false;
        }
        return true;
    }
};

inline nlohmann::json to_json(const BcReport& r) {
    std::vector<std::string> residuals;
    for (const auto& v : r.residuals) residuals.push_back(v.str());
    std::ostringstream slack;
    slack << std::setprecision(12) << r.slack;
    return {{"family", r.family},       {"epsilon", r.epsilon.str()},
            {"depth", r.depth},         {"j", r.j},
            {"K", r.last},              {"mu_x_eps", r.mu_x_eps.str()},
            {"bound", r.bound.str()},   {"average", r.average.str()},
            {"variance", r.variance.str()}, {"slack_squared", r.slack_squared.str()},
            {"slack", slack.str()},     {"verdict", r.verdict ? "pass" : "fail"},
            {"seeds", r.seeds},         {"per_seed_residuals", residuals}};
}

inline nlohmann::json to_json(const McStats& s) {
    nlohmann::json hist = nlohmann::json::object();
    for (const auto& [count, freq] : s.histogram) hist[std::to_string(count)] = freq;
    return {{"points", s.points}, {"min", s.min}, {"max", s.max}, {"mean", s.mean.str()}, {"histogram", hist}};
}

inline nlohmann::json to_json(const Report& r) {
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& c : r.checks) checks.push_back({{"name", c.name}, {"passed", c.passed}, {"data", c.data}});
    return {{"inputs", r.inputs}, {"checks", checks}, {"measurements", r.measurements}, {"all_passed", r.all_passed()}};
}

inline Report report_from_json(const nlohmann::json& j) {
    try {
        Report r;
        r.inputs = j.at("inputs");
        r.measurements = j.value("measurements", nlohmann::json::object());
        for (const auto& c : j.at("checks")) {
            r.checks.push_back({c.at("name").get<std::string>(), c.at("passed").get<bool>(), c.at("data")});
        }
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw SpecError(std::string("malformed report: ") + e.what());
    }
}

/// Plain-text table: one row per check.
inline std::string to_text(const Report& r) {
    std::ostringstream os;
    std::size_t width = 5;
    for (const auto& c : r.checks) width = std::max(width, c.name.size());
    os << std::left << std::setw(static_cast<int>(width)) << "check" << "  verdict  details\n";
    for (const auto& c : r.checks) {
        os << std::left << std::setw(static_cast<int>(width)) << c.name << "  " << (c.passed ? "PASS   " : "FAIL   ")
           << "  ";
        bool first = true;
        if (c.data.is_object()) {
            for (const auto& [key, value] : c.data.items()) {
                if (value.is_array() || value.is_object()) continue;
                if (value.is_string() && value.get<std::string>().empty()) continue;
                os << (first ? "" : ", ") << key << "=" << (value.is_string() ? value.get<std::string>() : value.dump());
                first = false;
            }
        }
        os << "\n";
    }
    for (const auto& [key, value] : r.measurements.items()) {
        os << key << ": " << (value.is_string() ? value.get<std::string>() : value.dump()) << "\n";
    }
    os << r.checks.size() << " check(s), " << (r.all_passed() ? "all passed" : "FAILURES present") << "\n";
    return os.str();
}

}  // namespace density_sieve
