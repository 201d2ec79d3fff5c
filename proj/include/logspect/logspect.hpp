#pragma once

#include "logspect/errors.hpp"
#include "logspect/graphs.hpp"
#include "logspect/graph_io.hpp"
#include "logspect/signals.hpp"
#include "logspect/linops.hpp"
#include "logspect/solvers.hpp"
#include "logspect/nnls.hpp"
#include "logspect/feasibility.hpp"
#include "logspect/evaluation.hpp"
#include "logspect/rng.hpp"
#include "logspect/parallel.hpp"
