#pragma once

// Band-sweeping M-ary PSK simulator: sweeping-carrier modulation, fading
// channel, envelope-detection channel estimator, equalization, and the
// Monte-Carlo harness. Include this to get the whole library.

#include "bspsk/channel.hpp"
#include "bspsk/errors.hpp"
#include "bspsk/receiver.hpp"
#include "bspsk/rng.hpp"
#include "bspsk/runner.hpp"
#include "bspsk/scenario.hpp"
#include "bspsk/signal.hpp"
#include "bspsk/spectrum.hpp"
#include "bspsk/sweep.hpp"
