#pragma once

#include "divq/agent.hpp"
#include "divq/autodiff.hpp"
#include "divq/config.hpp"
#include "divq/csv.hpp"
#include "divq/env.hpp"
#include "divq/errors.hpp"
#include "divq/harness.hpp"
#include "divq/inequality.hpp"
#include "divq/nn.hpp"
#include "divq/optim.hpp"
#include "divq/recipes.hpp"
#include "divq/replay.hpp"
#include "divq/rng.hpp"
#include "divq/similarity.hpp"
#include "divq/stats.hpp"
#include "divq/svg.hpp"
#include "divq/tensor.hpp"
