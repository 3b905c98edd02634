#pragma once

#include "layercomp/adaptive.hpp"
#include "layercomp/csv.hpp"
#include "layercomp/digits.hpp"
#include "layercomp/idx.hpp"
#include "layercomp/linear.hpp"
#include "layercomp/matrix.hpp"
#include "layercomp/network.hpp"
#include "layercomp/nn_bounds.hpp"
#include "layercomp/partition.hpp"
#include "layercomp/piecewise.hpp"
#include "layercomp/rng.hpp"
#include "layercomp/schedule.hpp"
#include "layercomp/sim.hpp"
#include "layercomp/train.hpp"
#include "layercomp/version.hpp"
