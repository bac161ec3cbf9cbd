#ifndef MDIVW_MDIVW_HPP
#define MDIVW_MDIVW_HPP

#include "mdivw/comparators.hpp"
#include "mdivw/diagnostics.hpp"
#include "mdivw/errors.hpp"
#include "mdivw/estimators.hpp"
#include "mdivw/math.hpp"
#include "mdivw/moments.hpp"
#include "mdivw/selection.hpp"
#include "mdivw/simulation.hpp"
#include "mdivw/summary_data.hpp"

#endif
