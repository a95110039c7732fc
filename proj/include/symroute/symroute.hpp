#pragma once

#include "symroute/types.hpp"
#include "symroute/complexity.hpp"
#include "symroute/resources.hpp"
#include "symroute/router.hpp"
#include "symroute/rules.hpp"
#include "symroute/fusion.hpp"
#include "symroute/metrics.hpp"
#include "symroute/executors.hpp"
#include "symroute/workload.hpp"
#include "symroute/config.hpp"
#include "symroute/report.hpp"
