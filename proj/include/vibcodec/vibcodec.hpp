#pragma once

// Umbrella header for the whole library.

#include "vibcodec/baselines.hpp"
#include "vibcodec/config.hpp"
#include "vibcodec/data.hpp"
#include "vibcodec/decoder.hpp"
#include "vibcodec/diagnostics.hpp"
#include "vibcodec/dsp.hpp"
#include "vibcodec/encoder.hpp"
#include "vibcodec/frame.hpp"
#include "vibcodec/harmonic.hpp"
#include "vibcodec/metrics.hpp"
#include "vibcodec/stream.hpp"
#include "vibcodec/wire.hpp"
