#pragma once

#include "xcal/access_engine.hpp"
#include "xcal/astro_time.hpp"
#include "xcal/constants.hpp"
#include "xcal/csv.hpp"
#include "xcal/error.hpp"
#include "xcal/parallel.hpp"
#include "xcal/propagator.hpp"
#include "xcal/scenario.hpp"
#include "xcal/sensing_geometry.hpp"
#include "xcal/target_catalog.hpp"
#include "xcal/vec3.hpp"
#include "xcal/xcal_planner.hpp"
