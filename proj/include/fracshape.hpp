#pragma once

#include "fracshape/error.hpp"
#include "fracshape/polynomial.hpp"
#include "fracshape/focore.hpp"
#include "fracshape/compensate.hpp"
#include "fracshape/approx.hpp"
#include "fracshape/loopshape.hpp"
#include "fracshape/simtime.hpp"
