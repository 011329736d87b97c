#pragma once

#include "config_json.hpp"
#include "energy.hpp"
#include "engine.hpp"
#include "error.hpp"
#include "fan.hpp"
#include "gru.hpp"
#include "model.hpp"
#include "params.hpp"
#include "report.hpp"
#include "rng.hpp"
#include "scheduler.hpp"
#include "telemetry.hpp"
#include "thermal.hpp"
#include "trace.hpp"
#include "train.hpp"
#include "utilization.hpp"
#include "workload.hpp"
