#pragma once
// Umbrella header: pulls in the whole library.

#include "config.hpp"
#include "errors.hpp"
#include "explore.hpp"
#include "imitation.hpp"
#include "interval_set.hpp"
#include "manifest.hpp"
#include "message.hpp"
#include "ontology.hpp"
#include "runtime.hpp"
#include "simulate.hpp"
#include "synth.hpp"
#include "trace_io.hpp"
#include "verify.hpp"
#include "version.hpp"

// agents.hpp comes in through runtime.hpp.
