#pragma once

#include "edge_subset.hpp"
#include "flows.hpp"
#include "graph.hpp"
#include "measure.hpp"
#include "oracle.hpp"
#include "rng.hpp"
#include "verification.hpp"
#include "version.hpp"
#include "worm.hpp"
