#pragma once

#include "pamp/amp.hpp"
#include "pamp/common.hpp"
#include "pamp/denoiser.hpp"
#include "pamp/experiment.hpp"
#include "pamp/harness.hpp"
#include "pamp/io.hpp"
#include "pamp/signal_model.hpp"
#include "pamp/state_evolution.hpp"
#include "pamp/tuner.hpp"
