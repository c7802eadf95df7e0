#pragma once

#include "reuselab/baselines.hpp"
#include "reuselab/block_grid.hpp"
#include "reuselab/ceiling.hpp"
#include "reuselab/cli.hpp"
#include "reuselab/drift.hpp"
#include "reuselab/error.hpp"
#include "reuselab/framestream.hpp"
#include "reuselab/grid.hpp"
#include "reuselab/io.hpp"
#include "reuselab/planner.hpp"
#include "reuselab/reproduce.hpp"
#include "reuselab/rng.hpp"
#include "reuselab/session.hpp"
#include "reuselab/table.hpp"
