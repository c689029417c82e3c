#pragma once

#include "coldloop/analysis.hpp"
#include "coldloop/calibration.hpp"
#include "coldloop/control.hpp"
#include "coldloop/error.hpp"
#include "coldloop/experiment.hpp"
#include "coldloop/format.hpp"
#include "coldloop/io.hpp"
#include "coldloop/pattern.hpp"
#include "coldloop/plant.hpp"
#include "coldloop/stats.hpp"
