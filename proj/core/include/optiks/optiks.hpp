#pragma once

#include "optiks/analysis.hpp"
#include "optiks/config.hpp"
#include "optiks/error.hpp"
#include "optiks/geometry.hpp"
#include "optiks/interp.hpp"
#include "optiks/io.hpp"
#include "optiks/losses.hpp"
#include "optiks/pipeline.hpp"
#include "optiks/pns.hpp"
#include "optiks/solver.hpp"
#include "optiks/spectral.hpp"
