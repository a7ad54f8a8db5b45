// lqvi -- constrained linear-quadratic dynamic games via affine variational inequalities
// Copyright 2026 lqvi contributors
// Licensed under Apache 2.0

#pragma once

#include "lqvi/active_set.hpp"
#include "lqvi/first_order.hpp"
#include "lqvi/fischer_burmeister.hpp"
#include "lqvi/game.hpp"
#include "lqvi/newton.hpp"
#include "lqvi/problem.hpp"
#include "lqvi/rh_sim.hpp"
#include "lqvi/riccati.hpp"
#include "lqvi/scenarios.hpp"
#include "lqvi/serialize.hpp"
#include "lqvi/solvers.hpp"
