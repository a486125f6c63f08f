#pragma once

#include <momrate/combinatorics.hpp>
#include <momrate/designs.hpp>
#include <momrate/error_laws.hpp>
#include <momrate/exact.hpp>
#include <momrate/io.hpp>
#include <momrate/moments.hpp>
#include <momrate/monte_carlo.hpp>
#include <momrate/ols.hpp>
#include <momrate/profiles.hpp>
#include <momrate/rates.hpp>
#include <momrate/rng.hpp>
