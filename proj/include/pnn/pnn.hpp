#pragma once

// Umbrella header for the parallel-connected network library.

#include "pnn/checkpoint.hpp"
#include "pnn/dataio.hpp"
#include "pnn/errors.hpp"
#include "pnn/experiment.hpp"
#include "pnn/linalg.hpp"
#include "pnn/metrics.hpp"
#include "pnn/network.hpp"
#include "pnn/reports.hpp"
#include "pnn/rng.hpp"
#include "pnn/synth.hpp"
#include "pnn/train.hpp"
