#pragma once

#include "hjc/core.hpp"
#include "hjc/dynamics.hpp"
#include "hjc/geometry.hpp"
#include "hjc/grid.hpp"
#include "hjc/solver.hpp"
#include "hjc/oracle.hpp"
#include "hjc/compose.hpp"
#include "hjc/rollout.hpp"
#include "hjc/io.hpp"
#include "hjc/config.hpp"
#include "hjc/study.hpp"
