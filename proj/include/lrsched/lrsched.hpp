#pragma once

#include "lrsched/cli.hpp"
#include "lrsched/errors.hpp"
#include "lrsched/model.hpp"
#include "lrsched/parallel.hpp"
#include "lrsched/registry.hpp"
#include "lrsched/report.hpp"
#include "lrsched/scenario.hpp"
#include "lrsched/scheduler.hpp"
#include "lrsched/scoring.hpp"
#include "lrsched/simulator.hpp"
#include "lrsched/units.hpp"
#include "lrsched/workload.hpp"
