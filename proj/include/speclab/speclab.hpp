#pragma once

// Everything except the command-line layer.

#include "speclab/error.hpp"
#include "speclab/linalg.hpp"
#include "speclab/spectrum.hpp"
#include "speclab/sphere.hpp"
#include "speclab/kernels.hpp"
#include "speclab/filters.hpp"
#include "speclab/targets.hpp"
#include "speclab/regression.hpp"
#include "speclab/rates.hpp"
#include "speclab/stats.hpp"
#include "speclab/oracle.hpp"
#include "speclab/harness.hpp"
#include "speclab/csv.hpp"
#include "speclab/config.hpp"
