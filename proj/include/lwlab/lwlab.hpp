#pragma once

// Umbrella header: the whole laboratory.

#include "lwlab/compatibility.hpp"
#include "lwlab/config.hpp"
#include "lwlab/constants.hpp"
#include "lwlab/core.hpp"
#include "lwlab/dynamics.hpp"
#include "lwlab/errors.hpp"
#include "lwlab/free_field.hpp"
#include "lwlab/grid.hpp"
#include "lwlab/io.hpp"
#include "lwlab/lightcone.hpp"
#include "lwlab/lw_field.hpp"
#include "lwlab/mollifier.hpp"
#include "lwlab/propagation.hpp"
#include "lwlab/quadrature.hpp"
#include "lwlab/scenarios.hpp"
#include "lwlab/trajectory.hpp"
#include "lwlab/units.hpp"
#include "lwlab/vec3.hpp"
