#pragma once

#include "dampedlab/cli/config.hpp"
#include "dampedlab/cli/emit.hpp"
#include "dampedlab/cli/runner.hpp"
