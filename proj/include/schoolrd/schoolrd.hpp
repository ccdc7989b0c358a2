#pragma once

// Centralized school-choice matching (student-proposing deferred acceptance
// with lottery and test-score priorities), exact eligibility-set calculus for
// pairwise treatment contrasts, propensity-weight diagnostics, and a
// local-linear boundary-contrast estimator with a Monte Carlo harness.

#include "schoolrd/demo.hpp"
#include "schoolrd/dgp.hpp"
#include "schoolrd/diagnostic.hpp"
#include "schoolrd/eligibility.hpp"
#include "schoolrd/error.hpp"
#include "schoolrd/estimator.hpp"
#include "schoolrd/experiments.hpp"
#include "schoolrd/io.hpp"
#include "schoolrd/linalg.hpp"
#include "schoolrd/market.hpp"
#include "schoolrd/matching.hpp"
#include "schoolrd/parallel.hpp"
#include "schoolrd/propensity.hpp"
#include "schoolrd/region.hpp"
#include "schoolrd/rng.hpp"
#include "schoolrd/validate.hpp"
