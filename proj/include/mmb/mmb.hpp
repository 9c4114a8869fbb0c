// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mmb/consistency_check.hpp"
#include "mmb/divergence.hpp"
#include "mmb/mismatch_bounds.hpp"
#include "mmb/quadrature.hpp"
#include "mmb/rng.hpp"
#include "mmb/scenario_doa.hpp"
#include "mmb/scenario_toa.hpp"
#include "mmb/sim_engine.hpp"
#include "mmb/stats_models.hpp"
