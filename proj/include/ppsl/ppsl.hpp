#pragma once

#include "ppsl/acquisition.hpp"
#include "ppsl/artifacts.hpp"
#include "ppsl/dominance.hpp"
#include "ppsl/dynamic.hpp"
#include "ppsl/gp.hpp"
#include "ppsl/hypervolume.hpp"
#include "ppsl/io.hpp"
#include "ppsl/metrics.hpp"
#include "ppsl/problems.hpp"
#include "ppsl/psmodel.hpp"
#include "ppsl/rng.hpp"
#include "ppsl/runner.hpp"
#include "ppsl/sampling.hpp"
#include "ppsl/scalarize.hpp"
#include "ppsl/surrogate.hpp"
#include "ppsl/trainer.hpp"
#include "ppsl/types.hpp"
