#pragma once

// Umbrella header: flatness-preserving discretization of control systems
// via discretization maps and tangent-lifted charts, plus the closed-loop
// tracking harness.

#include "flatdisc/errors.hpp"
#include "flatdisc/random.hpp"
#include "flatdisc/systems.hpp"
#include "flatdisc/rk4.hpp"
#include "flatdisc/diffeo.hpp"
#include "flatdisc/discretization_map.hpp"
#include "flatdisc/scheme.hpp"
#include "flatdisc/quad_example.hpp"
#include "flatdisc/tracking.hpp"
#include "flatdisc/harness.hpp"
