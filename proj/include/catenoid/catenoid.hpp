#pragma once

// Umbrella header.

#include "catenoid/quadrature.hpp"
#include "catenoid/stencil.hpp"
#include "catenoid/grid.hpp"
#include "catenoid/profile.hpp"
#include "catenoid/metric.hpp"
#include "catenoid/geometry.hpp"
#include "catenoid/curvature.hpp"
#include "catenoid/spectral.hpp"
#include "catenoid/obstruction.hpp"
#include "catenoid/constructor.hpp"
#include "catenoid/harness.hpp"
