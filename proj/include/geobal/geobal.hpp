#pragma once

#include "geobal/error.hpp"
#include "geobal/factor_state.hpp"
#include "geobal/factorize.hpp"
#include "geobal/harmonize.hpp"
#include "geobal/lp.hpp"
#include "geobal/lp_builder.hpp"
#include "geobal/metrics.hpp"
#include "geobal/model.hpp"
#include "geobal/mps.hpp"
#include "geobal/parameters.hpp"
#include "geobal/residual.hpp"
#include "geobal/solver.hpp"
#include "geobal/sweep.hpp"
#include "geobal/synthetic.hpp"
#include "geobal/system_io.hpp"
