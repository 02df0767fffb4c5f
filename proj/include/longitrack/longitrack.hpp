#pragma once

// Umbrella header: the whole longitudinal lesion segmentation toolkit.

#include "longitrack/cases.hpp"
#include "longitrack/errors.hpp"
#include "longitrack/fuse.hpp"
#include "longitrack/log.hpp"
#include "longitrack/metrics.hpp"
#include "longitrack/patch.hpp"
#include "longitrack/phantom.hpp"
#include "longitrack/pipeline.hpp"
#include "longitrack/prompt.hpp"
#include "longitrack/rng.hpp"
#include "longitrack/segment.hpp"
#include "longitrack/svol.hpp"
#include "longitrack/volume.hpp"
