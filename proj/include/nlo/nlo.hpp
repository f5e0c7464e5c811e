#pragma once

#include "nlo/energy.hpp"
#include "nlo/errors.hpp"
#include "nlo/experiment.hpp"
#include "nlo/grid.hpp"
#include "nlo/inequalities.hpp"
#include "nlo/kernel.hpp"
#include "nlo/solvers.hpp"
#include "nlo/young.hpp"
