#pragma once

// Umbrella header for the geodesic diffusion library.

#include "gdm/adam.hpp"
#include "gdm/checkpoint.hpp"
#include "gdm/config.hpp"
#include "gdm/dataset_io.hpp"
#include "gdm/diffusion.hpp"
#include "gdm/errors.hpp"
#include "gdm/fisher_rao.hpp"
#include "gdm/metrics.hpp"
#include "gdm/mlp.hpp"
#include "gdm/parallel.hpp"
#include "gdm/pgm.hpp"
#include "gdm/rng.hpp"
#include "gdm/sampler.hpp"
#include "gdm/schedule.hpp"
#include "gdm/testbed.hpp"
