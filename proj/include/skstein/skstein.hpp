#pragma once

#include "skstein/alias_table.hpp"
#include "skstein/approx_lemma_sk.hpp"
#include "skstein/errors.hpp"
#include "skstein/gaussian_tools.hpp"
#include "skstein/mcmc.hpp"
#include "skstein/mixture.hpp"
#include "skstein/quadrature.hpp"
#include "skstein/rng.hpp"
#include "skstein/sk_model.hpp"
#include "skstein/stats.hpp"
#include "skstein/stein.hpp"
#include "skstein/tap.hpp"
#include "skstein/test_functions.hpp"
#include "skstein/experiments/config.hpp"
#include "skstein/experiments/fit.hpp"
#include "skstein/experiments/parallel.hpp"
#include "skstein/experiments/report.hpp"
#include "skstein/experiments/runners.hpp"
#include "skstein/experiments/selftest.hpp"
