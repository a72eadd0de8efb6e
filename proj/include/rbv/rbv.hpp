#pragma once

#include "rbv/catalog.hpp"
#include "rbv/error.hpp"
#include "rbv/grid.hpp"
#include "rbv/grid_io.hpp"
#include "rbv/packing.hpp"
#include "rbv/parallel.hpp"
#include "rbv/quadrature.hpp"
#include "rbv/report.hpp"
#include "rbv/riesz.hpp"
#include "rbv/rng.hpp"
#include "rbv/sobolev.hpp"
#include "rbv/varexp.hpp"
#include "rbv/weights.hpp"
