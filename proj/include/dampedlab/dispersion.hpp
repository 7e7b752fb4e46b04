#pragma once

#include "dampedlab/dispersion/partition.hpp"
#include "dampedlab/dispersion/paths.hpp"
#include "dampedlab/dispersion/projector.hpp"
