#pragma once

// Umbrella header for the discfa library: discrete factor analysis for
// non-negative count data under Poisson / negative binomial bases with
// optional zero inflation and truncation, fitted by exact convolution
// likelihoods and selected by forward AIC search.

#include "distributions.hpp"
#include "errors.hpp"
#include "estimation.hpp"
#include "io.hpp"
#include "likelihood.hpp"
#include "numeric.hpp"
#include "optim.hpp"
#include "report.hpp"
#include "search.hpp"
#include "simulate.hpp"
#include "types.hpp"
