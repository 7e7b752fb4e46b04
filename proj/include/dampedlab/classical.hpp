#pragma once

#include "dampedlab/classical/averages.hpp"
#include "dampedlab/classical/observable.hpp"
#include "dampedlab/classical/orbits.hpp"
#include "dampedlab/classical/torus_map.hpp"
