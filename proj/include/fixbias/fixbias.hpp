#pragma once

#include "fixbias/errors.hpp"
#include "fixbias/grid.hpp"
#include "fixbias/random.hpp"
#include "fixbias/matrix.hpp"
#include "fixbias/eigen.hpp"
#include "fixbias/fit.hpp"
#include "fixbias/model.hpp"
#include "fixbias/relu_model.hpp"
#include "fixbias/spectral.hpp"
#include "fixbias/gd.hpp"
#include "fixbias/frex.hpp"
