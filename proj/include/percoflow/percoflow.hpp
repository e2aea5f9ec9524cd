#pragma once

#include "percoflow/errors.hpp"
#include "percoflow/geometry.hpp"
#include "percoflow/clip.hpp"
#include "percoflow/graph.hpp"
#include "percoflow/lattice.hpp"
#include "percoflow/capacities.hpp"
#include "percoflow/maxflow.hpp"
#include "percoflow/cylinder.hpp"
#include "percoflow/montecarlo.hpp"
#include "percoflow/nu.hpp"
#include "percoflow/energy.hpp"
#include "percoflow/deviations.hpp"
#include "percoflow/io.hpp"
