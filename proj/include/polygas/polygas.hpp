#pragma once

#include "polygas/core.hpp"
#include "polygas/fft.hpp"
#include "polygas/quadrature.hpp"
#include "polygas/lattice.hpp"
#include "polygas/combinatorics.hpp"
#include "polygas/covariance.hpp"
#include "polygas/potential.hpp"
#include "polygas/polymer.hpp"
#include "polygas/polymer_blocks.hpp"
#include "polygas/boundpipe.hpp"
#include "polygas/simulator.hpp"
#include "polygas/kernel_io.hpp"
#include "polygas/config.hpp"
