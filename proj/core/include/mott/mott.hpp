#pragma once

#include "mott/chain_oracle.hpp"
#include "mott/env.hpp"
#include "mott/error.hpp"
#include "mott/index_set.hpp"
#include "mott/kernel.hpp"
#include "mott/mc_estimators.hpp"
#include "mott/network.hpp"
#include "mott/parallel.hpp"
#include "mott/rng.hpp"
#include "mott/stats.hpp"
#include "mott/version.hpp"
#include "mott/walk.hpp"
