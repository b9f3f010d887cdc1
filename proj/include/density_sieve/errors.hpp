#pragma once

#include <stdexcept>
#include <string>

namespace density_sieve {

// Malformed input: bad parameters, bad files, precondition violations the
// caller could have checked. The CLI maps these to exit code 2.
class SpecError : public std::invalid_argument {
public:
    explicit SpecError(const std::string& what) : std::invalid_argument(what) {}
};

// A search or materialization ran past its configured cap. The CLI maps
// these to exit code 3.
class BudgetError : public std::runtime_error {
public:
    explicit BudgetError(const std::string& what) : std::runtime_error(what) {}
};

// A mathematical precondition failed at run time (e.g. a block system is
// too shallow for the requested construction). Exit code 3.
class MathError : public std::runtime_error {
public:
    explicit MathError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace density_sieve
