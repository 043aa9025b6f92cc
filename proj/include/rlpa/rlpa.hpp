#pragma once

// Umbrella header for the robust local polynomial estimation library.

#include "rlpa/commands.hpp"
#include "rlpa/config.hpp"
#include "rlpa/contrast.hpp"
#include "rlpa/errors.hpp"
#include "rlpa/experiment.hpp"
#include "rlpa/huber_minimax.hpp"
#include "rlpa/kernel.hpp"
#include "rlpa/lepski.hpp"
#include "rlpa/lpa.hpp"
#include "rlpa/parametric.hpp"
#include "rlpa/quadrature.hpp"
#include "rlpa/rng.hpp"
#include "rlpa/simulate.hpp"
#include "rlpa/special.hpp"
#include "rlpa/variance.hpp"
