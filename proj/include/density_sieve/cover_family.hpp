#pragma once

#include <bit>
#include <cstdint>
#include <fstream>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "index_sets.hpp"
#include "measure_sets.hpp"
#include "rng.hpp"

namespace density_sieve {

/// Thrown when a finite family with the "error-after" rule is read past its end.
class FamilyExhausted : public SpecError {
public:
    explicit FamilyExhausted(const std::string& what) : SpecError(what) {}
};

/// Generator behind a CoverFamily. get(n) must be pure. The range and
/// progression queries have naive defaults; sources with structure override
/// them so block searches over astronomically long prefixes stay cheap.
class FamilySource {
public:
    virtual ~FamilySource() = default;

    virtual IntervalUnion get(Natural n) const = 0;

    /// True when range_union/progression_union cost is independent of the
    /// number of sets involved (up to the size of the answer).
    virtual bool fast_ranges() const { return false; }

    /// Union of A_a, ..., A_{b-1}.
    virtual IntervalUnion range_union(const Window& w, Natural a, Natural b) const {
        std::vector<Interval> raw;
        for (Natural n = a; n < b; ++n) {
            auto s = get(n);
            raw.insert(raw.end(), s.intervals().begin(), s.intervals().end());
        }
        return IntervalUnion::normalize(std::move(raw), w);
    }

    /// Union of A_{first + j*step} for 0 <= j < count.
    virtual IntervalUnion progression_union(const Window& w, Natural first, Natural step, Natural count) const {
        std::vector<Interval> raw;
        for (Natural j = 0; j < count; ++j) {
            auto s = get(first + j * step);
            raw.insert(raw.end(), s.intervals().begin(), s.intervals().end());
        }
        return IntervalUnion::normalize(std::move(raw), w);
    }

    /// Indices n in [lo, hi) with x in A_n.
    virtual std::vector<Natural> hits(const Rational& x, Natural lo, Natural hi) const {
        std::vector<Natural> out;
        for (Natural n = lo; n < hi; ++n) {
            if (get(n).contains(x)) out.push_back(n);
        }
        return out;
    }
};

/// Lazy sequence n -> A_n of interval unions inside a window.
class CoverFamily {
public:
    CoverFamily(Window w, nlohmann::json descriptor, std::shared_ptr<const FamilySource> source)
        : window_(std::move(w)), descriptor_(std::move(descriptor)), source_(std::move(source)) {}

    const Window& window() const { return window_; }
    const nlohmann::json& descriptor() const { return descriptor_; }
    const FamilySource& source() const { return *source_; }
    const std::shared_ptr<const FamilySource>& source_ptr() const { return source_; }

    IntervalUnion get(Natural n) const { return source_->get(n); }
    bool fast_ranges() const { return source_->fast_ranges(); }
    IntervalUnion range_union(Natural a, Natural b) const {
        if (b <= a) return IntervalUnion::empty(window_);
        return source_->range_union(window_, a, b);
    }
    IntervalUnion progression_union(Natural first, Natural step, Natural count) const {
        if (count == 0) return IntervalUnion::empty(window_);
        return source_->progression_union(window_, first, step, count);
    }
    std::vector<Natural> hits(const Rational& x, Natural lo, Natural hi) const {
        if (!window_.as_interval().contains(x) || hi <= lo) return {};
        return source_->hits(x, lo, hi);
    }

private:
    Window window_;
    nlohmann::json descriptor_;
    std::shared_ptr<const FamilySource> source_;
};

namespace detail {

/// Level L of the dyadic family holds indices [2^L - 1, 2^(L+1) - 1).
inline unsigned dyadic_level(Natural n) { return static_cast<unsigned>(std::bit_width(n + 1) - 1); }

class DyadicSource final : public FamilySource {
public:
    explicit DyadicSource(Window w) : w_(std::move(w)) {}

    IntervalUnion get(Natural n) const override {
        if (n == kNoMember) throw SpecError("dyadic family index overflows");
        unsigned level = dyadic_level(n);
        Natural pos = n + 1 - (Natural{1} << level);
        return IntervalUnion::normalize({cell(level, pos, pos + 1)}, w_);
    }

    bool fast_ranges() const override { return true; }

    IntervalUnion range_union(const Window& w, Natural a, Natural b) const override {
        std::vector<Interval> raw;
        Natural last = b - 1;
        unsigned la = dyadic_level(a), lb = dyadic_level(last);
        for (unsigned level = la; level <= lb; ++level) {
            Natural base = (Natural{1} << level) - 1;
            Natural p0 = level == la ? a - base : 0;
            BigInt p1 = level == lb ? BigInt(last - base + 1) : (BigInt(1) << level);
            raw.push_back(cell(level, BigInt(p0), p1));
        }
        return IntervalUnion::normalize(std::move(raw), w);
    }

    IntervalUnion progression_union(const Window& w, Natural first, Natural step, Natural count) const override {
        std::vector<Interval> raw;
        raw.reserve(static_cast<std::size_t>(count));
        for (Natural j = 0; j < count; ++j) {
            Natural n = first + j * step;
            unsigned level = dyadic_level(n);
            Natural pos = n + 1 - (Natural{1} << level);
            raw.push_back(cell(level, pos, pos + 1));
        }
        return IntervalUnion::normalize(std::move(raw), w);
    }

    std::vector<Natural> hits(const Rational& x, Natural lo, Natural hi) const override {
        std::vector<Natural> out;
        Rational u = (x - w_.lo) / w_.length();
        for (unsigned level = 0; level < 64; ++level) {
            BigInt pos = (u * Rational(BigInt(1) << level, BigInt(1))).floor();
            BigInt idx = (BigInt(1) << level) - 1 + pos;
            if (idx >= hi) break;
            if (idx >= lo) out.push_back(idx.convert_to<Natural>());
        }
        return out;
    }

private:
    Interval cell(unsigned level, const BigInt& p0, const BigInt& p1) const {
        BigInt den = BigInt(1) << level;
        return {w_.at(Rational(p0, den)), w_.at(Rational(p1, den))};
    }

    Window w_;
};

// A_n = [frac(n*step), frac(n*step) + length) wrapped around the window.
class RotationSource final : public FamilySource {
public:
    RotationSource(Window w, Rational step, Rational length)
        : w_(std::move(w)), step_(std::move(step)), length_(std::move(length)) {
        BigInt q = step_.denominator();
        period_ = q <= BigInt(std::numeric_limits<Natural>::max()) ? q.convert_to<Natural>() : 0;
    }

    IntervalUnion get(Natural n) const override {
        Rational start = Rational(BigInt(n) * step_.numerator() % step_.denominator(), step_.denominator());
        return wrapped(start, length_, w_);
    }

    bool fast_ranges() const override { return period_ != 0 && period_ <= 1'000'000; }

    IntervalUnion range_union(const Window& w, Natural a, Natural b) const override {
        if (fast_ranges() && b - a > period_) b = a + period_;
        return FamilySource::range_union(w, a, b);
    }

    IntervalUnion progression_union(const Window& w, Natural first, Natural step, Natural count) const override {
        // indices mod period repeat after period / gcd(step, period) terms
        if (fast_ranges()) {
            Natural cycle = period_ / std::gcd(step % period_ == 0 ? period_ : step % period_, period_);
            count = std::min(count, cycle);
        }
        return FamilySource::progression_union(w, first, step, count);
    }

    static IntervalUnion wrapped(const Rational& start, const Rational& length, const Window& w) {
        Rational end = start + length;
        std::vector<Interval> raw;
        if (end <= Rational(1)) {
            raw.push_back({w.at(start), w.at(end)});
        } else {
            raw.push_back({w.at(start), w.hi});
            raw.push_back({w.lo, w.at(end - Rational(1))});
        }
        return IntervalUnion::normalize(std::move(raw), w);
    }

private:
    Window w_;
    Rational step_;
    Rational length_;
    Natural period_ = 0;
};

// Independent uniform starts on a 2^-32 grid, lengths 1/(floor(n/divisor) + offset).
class RandomSource final : public FamilySource {
public:
    RandomSource(Window w, std::uint64_t seed, Natural divisor, Natural offset)
        : w_(std::move(w)), seed_(seed), divisor_(divisor), offset_(offset) {}

    Rational length_of(Natural n) const { return Rational(BigInt(1), BigInt(n / divisor_ + offset_)); }

    IntervalUnion get(Natural n) const override {
        Natural u = hash64(seed_, n) >> 32;
        return RotationSource::wrapped(Rational(BigInt(u), BigInt(1) << 32), length_of(n), w_);
    }

private:
    Window w_;
    std::uint64_t seed_;
    Natural divisor_;
    Natural offset_;
};

enum class Continuation { Repeat, DyadicAfter, ErrorAfter };

inline Continuation parse_continuation(const std::string& s) {
    if (s == "repeat") return Continuation::Repeat;
    if (s == "dyadic-after") return Continuation::DyadicAfter;
    if (s == "error-after") return Continuation::ErrorAfter;
    throw SpecError("unknown continuation rule '" + s + "'");
}

inline std::string continuation_name(Continuation c) {
    switch (c) {
        case Continuation::Repeat: return "repeat";
        case Continuation::DyadicAfter: return "dyadic-after";
        case Continuation::ErrorAfter: return "error-after";
    }
    return "";
}

class ListSource final : public FamilySource {
public:
    ListSource(Window w, std::vector<IntervalUnion> sets, Continuation rule)
        : w_(w), sets_(std::move(sets)), rule_(rule), tail_(std::move(w)) {
        if (sets_.empty() && rule_ != Continuation::DyadicAfter) {
            throw SpecError("finite family needs at least one set");
        }
    }

    IntervalUnion get(Natural n) const override {
        if (n < sets_.size()) return sets_[n];
        switch (rule_) {
            case Continuation::Repeat: return sets_[n % sets_.size()];
            case Continuation::DyadicAfter: return tail_.get(n - sets_.size());
            case Continuation::ErrorAfter: break;
        }
        throw FamilyExhausted("family index " + std::to_string(n) + " is past the last of " +
                              std::to_string(sets_.size()) + " sets (continuation: error-after)");
    }

    bool fast_ranges() const override { return sets_.size() <= 100'000; }

    IntervalUnion range_union(const Window& w, Natural a, Natural b) const override {
        Natural count = sets_.size();
        switch (rule_) {
            case Continuation::Repeat:
                if (b - a > count) b = a + count;
                return FamilySource::range_union(w, a, b);
            case Continuation::DyadicAfter: {
                if (b <= count) return FamilySource::range_union(w, a, b);
                auto head = FamilySource::range_union(w, a, std::max(a, std::min(b, count)));
                Natural ta = a > count ? a - count : 0;
                return unite(head, tail_.range_union(w, ta, b - count));
            }
            case Continuation::ErrorAfter: break;
        }
        return FamilySource::range_union(w, a, b);
    }

    const std::vector<IntervalUnion>& sets() const { return sets_; }
    Continuation rule() const { return rule_; }

private:
    Window w_;
    std::vector<IntervalUnion> sets_;
    Continuation rule_;
    DyadicSource tail_;
};

class RestrictedSource final : public FamilySource {
public:
    RestrictedSource(std::shared_ptr<const FamilySource> inner, Window outer, Window sub)
        : inner_(std::move(inner)), outer_(std::move(outer)), sub_(std::move(sub)) {}

    IntervalUnion get(Natural n) const override { return clip(inner_->get(n)); }
    bool fast_ranges() const override { return inner_->fast_ranges(); }
    IntervalUnion range_union(const Window&, Natural a, Natural b) const override {
        return clip(inner_->range_union(outer_, a, b));
    }
    IntervalUnion progression_union(const Window&, Natural first, Natural step, Natural count) const override {
        return clip(inner_->progression_union(outer_, first, step, count));
    }
    std::vector<Natural> hits(const Rational& x, Natural lo, Natural hi) const override {
        return inner_->hits(x, lo, hi);
    }

private:
    IntervalUnion clip(const IntervalUnion& u) const { return IntervalUnion::normalize(u.intervals(), sub_); }

    std::shared_ptr<const FamilySource> inner_;
    Window outer_;
    Window sub_;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Builtin families

/// Level L contributes the 2^L dyadic cells of the window, levels concatenated.
inline CoverFamily dyadic_family(const Window& w = {}) {
    nlohmann::json d = {{"kind", "dyadic"}, {"window", to_json(w)}, {"params", nlohmann::json::object()}};
    return CoverFamily(w, std::move(d), std::make_shared<detail::DyadicSource>(w));
}

inline CoverFamily rotation_family(const Rational& step, const Rational& length, const Window& w = {}) {
    if (step <= Rational(0) || step >= Rational(1)) throw SpecError("rotation step must lie in (0,1), got " + step.str());
    if (length <= Rational(0) || length >= Rational(1)) {
        throw SpecError("rotation length must lie in (0,1), got " + length.str());
    }
    nlohmann::json d = {{"kind", "rotation"},
                        {"window", to_json(w)},
                        {"params", {{"step", step.str()}, {"length", length.str()}}}};
    return CoverFamily(w, std::move(d), std::make_shared<detail::RotationSource>(w, step, length));
}

/// Lengths 1/(floor(n/divisor) + offset): a divergent schedule.
struct HarmonicSchedule {
    Natural divisor = 4;
    Natural offset = 2;
};

inline CoverFamily shrinking_random_family(std::uint64_t seed, HarmonicSchedule schedule = {}, const Window& w = {}) {
    if (schedule.divisor == 0 || schedule.offset == 0) throw SpecError("random family schedule must be positive");
    nlohmann::json d = {{"kind", "random"},
                        {"window", to_json(w)},
                        {"params", {{"divisor", schedule.divisor}, {"offset", schedule.offset}}},
                        {"seed", seed}};
    return CoverFamily(w, std::move(d), std::make_shared<detail::RandomSource>(w, seed, schedule.divisor, schedule.offset));
}

inline CoverFamily list_family(const Window& w, std::vector<IntervalUnion> sets, const std::string& continuation) {
    auto rule = detail::parse_continuation(continuation);
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& s : sets) {
        if (!(s.window() == w)) throw SpecError("family set window differs from family window");
        nlohmann::json ivs = nlohmann::json::array();
        for (const auto& iv : s.intervals()) ivs.push_back(quad_to_json(iv.lo, iv.hi));
        arr.push_back(std::move(ivs));
    }
    nlohmann::json d = {{"kind", "file"},
                        {"window", to_json(w)},
                        {"params", {{"sets", std::move(arr)}, {"continuation", continuation}}}};
    return CoverFamily(w, std::move(d), std::make_shared<detail::ListSource>(w, std::move(sets), rule));
}

/// The same sequence seen through a sub-window.
inline CoverFamily restrict_family(const CoverFamily& f, const Window& sub) {
    if (sub.lo < f.window().lo || sub.hi > f.window().hi) throw SpecError("restriction window escapes family window");
    nlohmann::json d = {{"kind", "restricted"}, {"window", to_json(sub)}, {"inner", f.descriptor()}};
    return CoverFamily(sub, std::move(d),
                       std::make_shared<detail::RestrictedSource>(f.source_ptr(), f.window(), sub));
}

// ---------------------------------------------------------------------------
// JSON family specs and files

inline std::vector<IntervalUnion> sets_from_json(const nlohmann::json& arr, const Window& w) {
    if (!arr.is_array()) throw SpecError("family 'sets' must be an array of interval lists");
    std::vector<IntervalUnion> sets;
    for (const auto& s : arr) {
        sets.push_back(union_from_json({{"window", to_json(w)}, {"intervals", s}}, &w));
    }
    return sets;
}

inline nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SpecError("cannot open '" + path + "'");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw SpecError("malformed JSON in '" + path + "': " + e.what());
    }
}

/// File holding {"window": quad, "sets": [[quad, ...], ...], "continuation": rule}.
inline CoverFamily family_from_file_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("window") || !j.contains("sets") || !j.contains("continuation")) {
        throw SpecError("family file needs 'window', 'sets' and 'continuation'");
    }
    if (!j["continuation"].is_string()) throw SpecError("continuation must be a string");
    Window w = window_from_json(j["window"]);
    return list_family(w, sets_from_json(j["sets"], w), j["continuation"].get<std::string>());
}

inline CoverFamily family_from_file(const std::string& path) { return family_from_file_json(read_json_file(path)); }

/// {"window": quad, "kind": "dyadic"|"rotation"|"random"|"file", "params": {...}, "seed": n}
inline CoverFamily family_from_spec(const nlohmann::json& spec) {
    if (!spec.is_object() || !spec.contains("kind") || !spec["kind"].is_string()) {
        throw SpecError("family spec needs a string 'kind'");
    }
    const std::string kind = spec["kind"].get<std::string>();
    Window w = spec.contains("window") ? window_from_json(spec["window"]) : Window{};
    const nlohmann::json params = spec.value("params", nlohmann::json::object());
    auto rational_param = [&](const char* key) {
        if (!params.contains(key) || !params[key].is_string()) {
            throw SpecError(std::string("family param '") + key + "' must be a \"p/q\" string");
        }
        return Rational::parse(params[key].get<std::string>());
    };
    auto natural_param = [&](const char* key, Natural fallback) -> Natural {
        if (!params.contains(key)) return fallback;
        if (!params[key].is_number_unsigned()) throw SpecError(std::string("family param '") + key + "' must be a natural");
        return params[key].get<Natural>();
    };
    if (kind == "dyadic") return dyadic_family(w);
    if (kind == "rotation") return rotation_family(rational_param("step"), rational_param("length"), w);
    if (kind == "random") {
        if (spec.contains("seed") && !spec["seed"].is_number_unsigned()) throw SpecError("family seed must be a natural");
        std::uint64_t seed = spec.value("seed", std::uint64_t{0});
        return shrinking_random_family(seed, {natural_param("divisor", 4), natural_param("offset", 2)}, w);
    }
    if (kind == "file") {
        if (params.contains("path")) {
            if (!params["path"].is_string()) throw SpecError("family param 'path' must be a string");
            auto f = family_from_file(params["path"].get<std::string>());
            if (spec.contains("window") && !(f.window() == w)) throw SpecError("family file window differs from spec window");
            return f;
        }
        nlohmann::json body = {{"window", to_json(w)},
                               {"sets", params.value("sets", nlohmann::json())},
                               {"continuation", params.value("continuation", nlohmann::json())}};
        return family_from_file_json(body);
    }
    if (kind == "restricted") {
        if (!spec.contains("inner")) throw SpecError("restricted family needs 'inner'");
        return restrict_family(family_from_spec(spec["inner"]), w);
    }
    throw SpecError("unknown family kind '" + kind + "'");
}

// ---------------------------------------------------------------------------

/// A sigma-finite space modelled as finitely many disjoint windows, each with
/// the restriction of the sequence to that window.
class SigmaFiniteFamily {
public:
    explicit SigmaFiniteFamily(std::vector<CoverFamily> pieces) : pieces_(std::move(pieces)) {
        if (pieces_.empty()) throw SpecError("sigma-finite family needs at least one window");
        for (std::size_t i = 0; i < pieces_.size(); ++i) {
            for (std::size_t j = i + 1; j < pieces_.size(); ++j) {
                const auto& a = pieces_[i].window();
                const auto& b = pieces_[j].window();
                if (a.lo < b.hi && b.lo < a.hi) throw SpecError("sigma-finite windows must be pairwise disjoint");
            }
        }
    }

    /// Splits one family along disjoint sub-windows.
    static SigmaFiniteFamily from_windows(const CoverFamily& f, const std::vector<Window>& windows) {
        std::vector<CoverFamily> pieces;
        for (const auto& w : windows) pieces.push_back(restrict_family(f, w));
        return SigmaFiniteFamily(std::move(pieces));
    }

    std::size_t window_count() const { return pieces_.size(); }
    const CoverFamily& restriction(std::size_t m) const { return pieces_.at(m); }

private:
    std::vector<CoverFamily> pieces_;
};

}  // namespace density_sieve
