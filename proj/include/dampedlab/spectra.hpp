#pragma once

#include "dampedlab/spectra/spectrum.hpp"
