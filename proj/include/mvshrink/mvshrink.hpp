#pragma once

// Umbrella header for the whole library.

#include "mvshrink/backtest.hpp"
#include "mvshrink/core.hpp"
#include "mvshrink/errors.hpp"
#include "mvshrink/experiment.hpp"
#include "mvshrink/frontier.hpp"
#include "mvshrink/io.hpp"
#include "mvshrink/loss.hpp"
#include "mvshrink/rmt.hpp"
#include "mvshrink/rng.hpp"
#include "mvshrink/shrinkage.hpp"
#include "mvshrink/simulate.hpp"
#include "mvshrink/stats.hpp"
#include "mvshrink/study.hpp"
#include "mvshrink/threading.hpp"
#include "mvshrink/types.hpp"
#include "mvshrink/version.hpp"
