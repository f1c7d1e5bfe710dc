#pragma once

#include "lanekit/convergence.hpp"
#include "lanekit/core.hpp"
#include "lanekit/datasets.hpp"
#include "lanekit/experiment.hpp"
#include "lanekit/index/brute_force.hpp"
#include "lanekit/index/dataset.hpp"
#include "lanekit/index/handle.hpp"
#include "lanekit/index/hnsw.hpp"
#include "lanekit/index/ivf.hpp"
#include "lanekit/index/persist.hpp"
#include "lanekit/index/vecs_io.hpp"
#include "lanekit/lanes.hpp"
#include "lanekit/metrics.hpp"
#include "lanekit/planner.hpp"
#include "lanekit/prf.hpp"
