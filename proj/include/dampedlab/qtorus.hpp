#pragma once

#include "dampedlab/qtorus/coherent.hpp"
#include "dampedlab/qtorus/propagator.hpp"
#include "dampedlab/qtorus/quantize.hpp"
