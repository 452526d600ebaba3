#pragma once

#include "dpk/core_lp.hpp"
#include "dpk/credal.hpp"
#include "dpk/dipk.hpp"
#include "dpk/dpk.hpp"
#include "dpk/error.hpp"
#include "dpk/measure.hpp"
#include "dpk/observation.hpp"
#include "dpk/survey.hpp"
