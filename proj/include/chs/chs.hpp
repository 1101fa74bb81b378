#pragma once

// Umbrella header for the viscous Cahn-Hilliard system simulator.

#include "chs/config.hpp"
#include "chs/diagnostics.hpp"
#include "chs/elliptic.hpp"
#include "chs/errors.hpp"
#include "chs/experiments.hpp"
#include "chs/field_io.hpp"
#include "chs/grid.hpp"
#include "chs/potential.hpp"
#include "chs/run.hpp"
#include "chs/stepper.hpp"
