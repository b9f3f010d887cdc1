// density_sieve: extraction, verification, pseudo-unions and the Cantor
// counterexample from the command line. Every output is canonical JSON
// (sorted keys) embedding the resolved configuration.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "density_sieve.hpp"

namespace ds = density_sieve;
using nlohmann::json;

namespace {

constexpr int kExitSpec = 2;
constexpr int kExitMath = 3;

struct FamilyArgs {
    std::string kind = "dyadic";
    std::string spec_file;
    std::string family_file;
    std::string step;
    std::string length;
    std::uint64_t family_seed = 0;
    ds::Natural divisor = 4;
    ds::Natural offset = 2;
    std::string window_lo = "0";
    std::string window_hi = "1";

    void attach(CLI::App* cmd) {
        cmd->add_option("--family", kind, "dyadic | rotation | random | file")->capture_default_str();
        cmd->add_option("--family-spec", spec_file, "JSON family spec (overrides the other family flags)");
        cmd->add_option("--family-file", family_file, "family file for --family file");
        cmd->add_option("--step", step, "rotation step p/q");
        cmd->add_option("--length", length, "rotation length p/q");
        cmd->add_option("--family-seed", family_seed, "seed of the random family")->capture_default_str();
        cmd->add_option("--divisor", divisor, "random family: lengths 1/(n/divisor + offset)")->capture_default_str();
        cmd->add_option("--offset", offset, "random family offset")->capture_default_str();
        cmd->add_option("--window-lo", window_lo, "window left end p/q")->capture_default_str();
        cmd->add_option("--window-hi", window_hi, "window right end p/q")->capture_default_str();
    }

    ds::CoverFamily resolve() const {
        if (!spec_file.empty()) return ds::family_from_spec(ds::read_json_file(spec_file));
        ds::Window w(ds::Rational::parse(window_lo), ds::Rational::parse(window_hi));
        json spec = {{"kind", kind}, {"window", ds::to_json(w)}, {"params", json::object()}};
        if (kind == "rotation") {
            if (step.empty() || length.empty()) throw ds::SpecError("--family rotation needs --step and --length");
            spec["params"] = {{"step", step}, {"length", length}};
        } else if (kind == "random") {
            spec["params"] = {{"divisor", divisor}, {"offset", offset}};
            spec["seed"] = family_seed;
        } else if (kind == "file") {
            if (family_file.empty()) throw ds::SpecError("--family file needs --family-file");
            spec["params"] = {{"path", family_file}};
        }
        return ds::family_from_spec(spec);
    }
};

/// Writes JSON to --out (summary to stdout) or to stdout (summary to stderr).
void emit(const json& doc, const std::string& out, const std::string& summary) {
    std::string text = doc.dump(2) + "\n";
    if (out.empty()) {
        std::cout << text;
        std::cerr << summary;
        return;
    }
    std::ofstream f(out, std::ios::binary);
    if (!f) throw ds::SpecError("cannot write '" + out + "'");
    f << text;
    std::cout << summary;
}

std::string approx(const ds::Rational& r) {
    std::ostringstream os;
    os << r.str() << " (~" << r.to_double() << ")";
    return os.str();
}

/// Builtin names (empty, squares, squares:S, powers_of_two, finite:a,b,c) or
/// a JSON file holding an index set, or any document with a "z" member.
ds::IndexSet index_set_arg(const std::string& arg) {
    if (arg == "empty") return ds::IndexSet::empty();
    if (arg == "squares") return ds::IndexSet::squares();
    if (arg == "powers_of_two") return ds::IndexSet::powers_of_two();
    auto parse_natural = [&](const std::string& s) -> ds::Natural {
        try {
            std::size_t used = 0;
            auto v = std::stoull(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            throw ds::SpecError("'" + s + "' is not a natural number in '" + arg + "'");
        }
    };
    if (arg.starts_with("squares:")) return ds::IndexSet::squares(parse_natural(arg.substr(8)));
    if (arg.starts_with("finite:")) {
        std::vector<ds::Natural> members;
        std::stringstream ss(arg.substr(7));
        for (std::string item; std::getline(ss, item, ',');) {
            if (!item.empty()) members.push_back(parse_natural(item));
        }
        return ds::IndexSet::finite(std::move(members));
    }
    json j = ds::read_json_file(arg);
    return ds::index_set_from_json(j.is_object() && j.contains("z") ? j["z"] : j);
}

json config_base(const std::string& command) {
    return {{"command", command}, {"iteration_cap", ds::default_iteration_cap()}};
}

// ---------------------------------------------------------------------------

struct ExtractArgs {
    FamilyArgs family;
    std::string epsilon;
    std::size_t depth = 0;
    std::optional<std::uint64_t> seed;
    std::string out;
};

int run_extract(const ExtractArgs& a) {
    auto family = a.family.resolve();
    auto eps = ds::Rational::parse(a.epsilon);
    std::uint64_t seed = a.seed.value_or(0);
    auto cert = ds::extract(family, eps, a.depth, seed);

    json doc = ds::to_json(cert);
    json config = config_base("extract");
    config["family"] = family.descriptor();
    config["epsilon"] = eps.str();
    config["depth"] = a.depth;
    config["seed"] = seed;
    config["seed_defaulted"] = !a.seed.has_value();
    doc["config"] = config;

    const auto& b = cert.blocks;
    ds::Natural nk = b.boundaries.back();
    std::ostringstream os;
    if (!a.seed) os << "no --seed given; using the default seed 0\n";
    os << "boundaries:";
    for (auto n : b.boundaries) os << " " << n;
    os << "\ndensity of Z at N_K = " << nk << ": " << approx(ds::density_at(cert.z, nk)) << "\n";
    os << "mu(X_eps) = " << approx(cert.x_eps.measure()) << "\n";
    os << "block  start  end  residual  target\n";
    for (std::size_t k = 1; k <= b.depth(); ++k) {
        os << k << "  " << b.block_start(k) << "  " << b.block_end(k) << "  " << b.residuals[k - 1].str() << "  "
           << b.target(k).str() << "\n";
    }
    emit(doc, a.out, os.str());
    return 0;
}

// ---------------------------------------------------------------------------

struct VerifyArgs {
    ExtractArgs inline_params;
    std::string cert;
    std::size_t j = 1;
    std::size_t last = 0;
    std::size_t m = 1;
    std::size_t seeds = 0;
    bool residual = false;
    ds::Natural mc_points = 0;
    ds::Natural mc_nmax = 0;
    std::uint64_t mc_seed = 0;
    ds::Natural budget = ds::kDefaultIntervalBudget;
    std::string out;
};

int run_verify(const VerifyArgs& a) {
    ds::ExtractionCertificate cert;
    json config = config_base("verify");
    if (!a.cert.empty()) {
        cert = ds::certificate_from_json(ds::read_json_file(a.cert));
        config["certificate"] = a.cert;
    } else {
        if (a.inline_params.epsilon.empty() || a.inline_params.depth == 0) {
            throw ds::SpecError("verify needs --cert or inline --epsilon and --depth");
        }
        auto family = a.inline_params.family.resolve();
        cert = ds::extract(family, ds::Rational::parse(a.inline_params.epsilon), a.inline_params.depth,
                           a.inline_params.seed.value_or(0));
        config["seed_defaulted"] = !a.inline_params.seed.has_value();
    }
    auto family = ds::family_from_spec(cert.family);
    std::size_t last = a.last ? a.last : cert.blocks.depth();

    config["family"] = cert.family;
    config["epsilon"] = cert.epsilon.str();
    config["depth"] = cert.blocks.depth();
    config["seed"] = cert.seed;
    config["j"] = a.j;
    config["K"] = last;
    config["m"] = a.m;
    config["seeds"] = a.seeds;
    config["residual"] = a.residual;
    config["mc_points"] = a.mc_points;
    config["mc_nmax"] = a.mc_nmax;
    config["mc_seed"] = a.mc_seed;
    config["interval_budget"] = a.budget;

    ds::Report report;
    report.inputs = config;
    bool cert_ok = true;
    for (const auto& c : ds::validate_certificate(cert, family)) {
        report.checks.push_back({"certificate_" + c.name, c.passed, {{"detail", c.detail}}});
        cert_ok = cert_ok && c.passed;
    }
    bool bc_ok = true;
    if (cert_ok && a.residual) {
        auto r = ds::truncated_residual(family, cert, a.j, last, a.m, a.budget);
        report.measurements["residual"] = {{"j", a.j}, {"K", last}, {"m", a.m}, {"value", r.str()}};
    }
    if (cert_ok && a.seeds > 0) {
        auto bc = ds::bc_bound_check(family, cert.epsilon, last, a.j, ds::seed_ensemble(cert.seed, a.seeds), a.budget);
        report.checks.push_back({"bc_bound", bc.verdict, ds::to_json(bc)});
        bc_ok = bc.verdict;
    }
    if (cert_ok && a.mc_points > 0) {
        ds::Natural nmax = a.mc_nmax ? a.mc_nmax : cert.blocks.boundaries.back();
        report.measurements["monte_carlo"] = ds::to_json(ds::monte_carlo_points(family, cert.z, nmax, a.mc_points, a.mc_seed));
    }
    emit(ds::to_json(report), a.out, ds::to_text(report));
    if (!cert_ok) return kExitSpec;
    return bc_ok ? 0 : kExitMath;
}

// ---------------------------------------------------------------------------

struct PseudoUnionArgs {
    std::vector<std::string> parts;
    std::vector<ds::Natural> cutoffs;
    ds::Natural scan_limit = 100'000;
    std::string out;
};

int run_pseudo_union(const PseudoUnionArgs& a) {
    std::vector<ds::IndexSet> parts;
    for (const auto& p : a.parts) parts.push_back(index_set_arg(p));
    ds::PseudoUnion pu;
    if (a.cutoffs.empty()) {
        pu = ds::pseudo_union(parts);
    } else {
        // Forced cutoffs are checked, never certified.
        pu = {ds::diagonal_union(parts, a.cutoffs, false), a.cutoffs};
    }
    auto checks = ds::verify_pseudo_union(parts, pu, a.scan_limit);

    json config = config_base("pseudo-union");
    config["parts"] = a.parts;
    config["forced_cutoffs"] = a.cutoffs;
    config["scan_limit"] = a.scan_limit;
    json jchecks = json::array();
    bool ok = true;
    std::ostringstream os;
    os << "cutoffs:";
    for (auto t : pu.cutoffs) os << " " << t;
    os << "\n";
    for (const auto& c : checks) {
        jchecks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
        ok = ok && c.passed;
        os << (c.passed ? "PASS  " : "FAIL  ") << c.name << (c.detail.empty() ? "" : "  " + c.detail) << "\n";
    }
    json doc = {{"config", config}, {"z", ds::to_json(pu.z)}, {"cutoffs", pu.cutoffs}, {"checks", jchecks},
                {"all_passed", ok}};
    emit(doc, a.out, os.str());
    return ok ? 0 : kExitMath;
}

// ---------------------------------------------------------------------------

struct CounterexampleArgs {
    std::size_t depth = 4;
    std::string z = "squares";
    bool emit_system = false;
    std::string out;
};

int run_counterexample(const CounterexampleArgs& a) {
    auto sys = ds::build_cantor_system(a.depth);
    auto props = ds::validate_system(sys);
    json config = config_base("counterexample");
    config["depth"] = a.depth;
    config["z"] = a.z;
    config["emit_system"] = a.emit_system;

    json doc = {{"config", config}, {"boundaries", sys.boundaries}};
    json jprops = json::array();
    bool ok = true;
    std::ostringstream os;
    os << "boundaries:";
    for (auto n : sys.boundaries) os << " " << n;
    os << "\n";
    for (const auto& p : props) {
        jprops.push_back(ds::to_json(p));
        ok = ok && p.passed;
        os << (p.passed ? "PASS  " : "FAIL  ") << p.name << (p.witness.empty() ? "" : "  " + p.witness) << "\n";
    }
    doc["validation"] = jprops;
    if (a.emit_system) doc["system"] = ds::to_json(sys);
    if (!ok) {
        emit(doc, a.out, os.str());
        return kExitMath;
    }
    auto d = ds::defeat(sys, index_set_arg(a.z));
    doc["defeat"] = ds::to_json(d);
    os << "n0 = " << d.n0 << ", chain starts in block " << d.start_block << "\nchain:";
    for (auto n : d.chain) os << " " << n;
    os << "\ncoverage count of the limit point: " << d.coverage << " (hits from the start block on: "
       << d.hits_from_start << ")\n";
    emit(doc, a.out, os.str());
    return 0;
}

// ---------------------------------------------------------------------------

struct DemoArgs {
    std::uint64_t seed = 0;
    std::string out;
};

int run_demo(const DemoArgs& a) {
    json doc = {{"config", [&] {
                     json c = config_base("demo");
                     c["seed"] = a.seed;
                     return c;
                 }()}};
    std::ostringstream os;

    auto family = ds::dyadic_family();
    auto cert = ds::extract(family, ds::Rational(1, 4), 40, a.seed);
    ds::Natural nk = cert.blocks.boundaries.back();
    auto density = ds::density_at(cert.z, nk);
    bool cert_ok = true;
    for (const auto& c : ds::validate_certificate(cert, family)) cert_ok = cert_ok && c.passed;
    auto small = ds::extract(family, ds::Rational(1, 4), 12, a.seed);
    auto residual = ds::truncated_residual(family, small, 2, 12, 1);
    doc["extraction"] = {{"family", "dyadic"},
                         {"epsilon", "1/4"},
                         {"depth", 40},
                         {"N_K", nk},
                         {"density_at_N_K", density.str()},
                         {"certificate_checks_pass", cert_ok},
                         {"residual_j2_K12_m1", residual.str()},
                         {"bc_bound_j2_K12", (small.x_eps.measure() * ds::Rational(1, 12)).str()}};
    os << "dyadic extraction, eps 1/4, depth 40: N_K = " << nk << ", density " << approx(density)
       << ", certificate " << (cert_ok ? "valid" : "INVALID") << "\n";
    os << "never covered in blocks 2..12 (depth-12 run): " << approx(residual) << " vs bound 1/12\n";

    std::vector<ds::IndexSet> parts{ds::IndexSet::squares(), ds::IndexSet::powers_of_two()};
    auto pu = ds::pseudo_union(parts);
    bool pu_ok = true;
    for (const auto& c : ds::verify_pseudo_union(parts, pu, 100'000)) pu_ok = pu_ok && c.passed;
    doc["pseudo_union"] = {{"parts", {"squares", "powers_of_two"}}, {"cutoffs", pu.cutoffs}, {"checks_pass", pu_ok}};
    os << "pseudo-union of squares and powers of two: cutoffs " << pu.cutoffs[0] << ", " << pu.cutoffs[1]
       << ", checks " << (pu_ok ? "pass" : "FAIL") << "\n";

    auto sys = ds::build_cantor_system(4);
    auto d = ds::defeat(sys, ds::IndexSet::squares());
    doc["counterexample"] = ds::to_json(d);
    os << "Cantor system depth 4 vs squares: n0 = " << d.n0 << ", coverage " << d.coverage << "\n";
    emit(doc, a.out, os.str());
    return cert_ok && pu_ok ? 0 : kExitMath;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Density-zero subsequences of infinite-multiplicity covers"};
    app.require_subcommand(1);

    ExtractArgs ex;
    auto* extract = app.add_subcommand("extract", "build blocks, select Z and write a certificate");
    ex.family.attach(extract);
    extract->add_option("--epsilon", ex.epsilon, "epsilon p/q")->required();
    extract->add_option("--depth", ex.depth, "number of blocks")->required();
    extract->add_option("--seed", ex.seed, "selection seed (default 0)");
    extract->add_option("--out", ex.out, "output file");

    VerifyArgs ve;
    auto* verify = app.add_subcommand("verify", "revalidate a certificate, residuals, seed ensembles, sampling");
    ve.inline_params.family.attach(verify);
    verify->add_option("--cert", ve.cert, "certificate file");
    verify->add_option("--epsilon", ve.inline_params.epsilon, "inline extraction epsilon");
    verify->add_option("--depth", ve.inline_params.depth, "inline extraction depth");
    verify->add_option("--seed", ve.inline_params.seed, "inline extraction seed");
    verify->add_option("--j", ve.j, "first block")->capture_default_str();
    verify->add_option("--K", ve.last, "last block (default: certificate depth)");
    verify->add_option("--m", ve.m, "multiplicity for --residual")->capture_default_str();
    verify->add_option("--seeds", ve.seeds, "seed ensemble size for the Borel-Cantelli check");
    verify->add_flag("--residual", ve.residual, "exact truncated residual");
    verify->add_option("--mc-points", ve.mc_points, "Monte Carlo sample points");
    verify->add_option("--mc-nmax", ve.mc_nmax, "Monte Carlo index bound (default N_K)");
    verify->add_option("--mc-seed", ve.mc_seed, "Monte Carlo seed")->capture_default_str();
    verify->add_option("--budget", ve.budget, "interval budget for exact residuals")->capture_default_str();
    verify->add_option("--out", ve.out, "output file");

    PseudoUnionArgs pa;
    auto* pseudo = app.add_subcommand("pseudo-union", "certified diagonal pseudo-union of density-zero sets");
    pseudo->add_option("--part", pa.parts, "empty | squares | squares:S | powers_of_two | finite:a,b | file")
        ->required();
    pseudo->add_option("--cutoffs", pa.cutoffs, "force cutoffs instead of searching (checked, not certified)")
        ->delimiter(',');
    pseudo->add_option("--scan-limit", pa.scan_limit, "almost-containment scan range")->capture_default_str();
    pseudo->add_option("--out", pa.out, "output file");

    CounterexampleArgs ca;
    auto* counter = app.add_subcommand("counterexample", "Cantor block system and the adversarial point");
    counter->add_option("--depth", ca.depth, "number of blocks")->capture_default_str();
    counter->add_option("--z", ca.z, "index set: empty | squares | squares:S | powers_of_two | finite:a,b | file")
        ->capture_default_str();
    counter->add_flag("--emit-system", ca.emit_system, "include every cylinder in the output");
    counter->add_option("--out", ca.out, "output file");

    DemoArgs da;
    auto* demo = app.add_subcommand("demo", "small end-to-end run of every module");
    demo->add_option("--seed", da.seed, "selection seed")->capture_default_str();
    demo->add_option("--out", da.out, "output file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kExitSpec;
    }

    try {
        if (*extract) return run_extract(ex);
        if (*verify) return run_verify(ve);
        if (*pseudo) return run_pseudo_union(pa);
        if (*counter) return run_counterexample(ca);
        if (*demo) return run_demo(da);
    } catch (const ds::SpecError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSpec;
    } catch (const ds::BudgetError& e) {
        std::cerr << "budget exceeded: " << e.what() << "\n";
        return kExitMath;
    } catch (const ds::MathError& e) {
        std::cerr << "mathematical failure: " << e.what() << "\n";
        return kExitMath;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: malformed JSON input: " << e.what() << "\n";
        return kExitSpec;
    }
    return kExitSpec;
}
