#pragma once

#include "parlab/config.hpp"
#include "parlab/darc.hpp"
#include "parlab/datagen.hpp"
#include "parlab/diffcore.hpp"
#include "parlab/encoders.hpp"
#include "parlab/envsuite.hpp"
#include "parlab/errors.hpp"
#include "parlab/metrics.hpp"
#include "parlab/offline_dataset.hpp"
#include "parlab/replay_buffer.hpp"
#include "parlab/rng.hpp"
#include "parlab/runner.hpp"
#include "parlab/sac.hpp"
#include "parlab/sweep.hpp"
#include "parlab/theory.hpp"
