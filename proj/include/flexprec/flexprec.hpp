// SPDX-License-Identifier: Apache-2.0
//
// Umbrella header.

#ifndef FLEXPREC_FLEXPREC_HPP
#define FLEXPREC_FLEXPREC_HPP

#include "baselines.hpp"
#include "channel_model.hpp"
#include "experiment.hpp"
#include "flex_omp.hpp"
#include "linear_precoding.hpp"
#include "rng.hpp"
#include "types.hpp"

#endif
