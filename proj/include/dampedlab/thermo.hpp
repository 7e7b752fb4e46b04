#pragma once

#include "dampedlab/thermo/gap.hpp"
#include "dampedlab/thermo/pressure.hpp"
#include "dampedlab/thermo/rate_function.hpp"
