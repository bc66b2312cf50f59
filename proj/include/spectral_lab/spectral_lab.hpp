#pragma once

#include "spectral_lab/errors.hpp"
#include "spectral_lab/experiment.hpp"
#include "spectral_lab/ftscale.hpp"
#include "spectral_lab/kernel.hpp"
#include "spectral_lab/linear_fit.hpp"
#include "spectral_lab/measure.hpp"
#include "spectral_lab/measure_io.hpp"
#include "spectral_lab/quadrature.hpp"
#include "spectral_lab/random_measure.hpp"
#include "spectral_lab/scaling.hpp"
#include "spectral_lab/schwinger.hpp"
#include "spectral_lab/toml.hpp"
