#pragma once

// Umbrella header for the concord library.

#include "concord/errors.hpp"
#include "concord/model.hpp"
#include "concord/codec.hpp"
#include "concord/adapters.hpp"
#include "concord/attention.hpp"
#include "concord/baseline.hpp"
#include "concord/inference.hpp"
#include "concord/selftrain.hpp"
#include "concord/metrics.hpp"
#include "concord/synth.hpp"
