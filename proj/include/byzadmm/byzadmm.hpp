#pragma once

#include "byzadmm/aggregation.hpp"
#include "byzadmm/attacks.hpp"
#include "byzadmm/config.hpp"
#include "byzadmm/csv.hpp"
#include "byzadmm/data.hpp"
#include "byzadmm/engine.hpp"
#include "byzadmm/errors.hpp"
#include "byzadmm/manifest.hpp"
#include "byzadmm/model.hpp"
#include "byzadmm/rng.hpp"
#include "byzadmm/schedule.hpp"
#include "byzadmm/three_block.hpp"
#include "byzadmm/updates.hpp"
#include "byzadmm/vec.hpp"
#include "byzadmm/verification.hpp"
