#pragma once

#include <cstdint>
#include <cstdlib>
#include <string>

#include "errors.hpp"

namespace density_sieve {

inline constexpr std::uint64_t kDefaultIterationCap = 1'000'000;

/// Iteration cap for block searches and envelope searches. The environment
/// variable DENSITY_SIEVE_ITER_CAP overrides the default.
inline std::uint64_t default_iteration_cap() {
    if (const char* env = std::getenv("DENSITY_SIEVE_ITER_CAP")) {
        try {
            std::size_t used = 0;
            auto v = std::stoull(env, &used);
            if (used == std::string(env).size() && v > 0) return v;
        } catch (const std::exception&) {
        }
        throw SpecError(std::string("DENSITY_SIEVE_ITER_CAP must be a positive integer, got '") + env + "'");
    }
    return kDefaultIterationCap;
}

}  // namespace density_sieve
