#pragma once

#include "setvalued/calibration.hpp"
#include "setvalued/core.hpp"
#include "setvalued/error.hpp"
#include "setvalued/evaluation.hpp"
#include "setvalued/formulations.hpp"
#include "setvalued/io.hpp"
#include "setvalued/oracle.hpp"
#include "setvalued/step_function.hpp"
