#pragma once

#include "bridge.hpp"
#include "checkpoint.hpp"
#include "dataset.hpp"
#include "experiment.hpp"
#include "jump_kl.hpp"
#include "jump_moments.hpp"
#include "mlp.hpp"
#include "mmd.hpp"
#include "rng.hpp"
#include "sampler.hpp"
#include "svg_plot.hpp"
#include "training.hpp"
