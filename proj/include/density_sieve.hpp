#pragma once

#include "density_sieve/counterexample.hpp"
#include "density_sieve/cover_family.hpp"
#include "density_sieve/errors.hpp"
#include "density_sieve/extractor.hpp"
#include "density_sieve/index_sets.hpp"
#include "density_sieve/limits.hpp"
#include "density_sieve/measure_sets.hpp"
#include "density_sieve/pideal.hpp"
#include "density_sieve/rational.hpp"
#include "density_sieve/rng.hpp"
#include "density_sieve/verify.hpp"
