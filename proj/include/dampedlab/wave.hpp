#pragma once

#include "dampedlab/wave/control.hpp"
#include "dampedlab/wave/evolve.hpp"
#include "dampedlab/wave/generator.hpp"
#include "dampedlab/wave/profile.hpp"
