#pragma once

#include "wavext/common.hpp"
#include "wavext/filters.hpp"
#include "wavext/cascade.hpp"
#include "wavext/dwt.hpp"
#include "wavext/dual.hpp"
#include "wavext/expression.hpp"
#include "wavext/domain.hpp"
#include "wavext/system.hpp"
#include "wavext/solvers.hpp"
#include "wavext/az.hpp"
