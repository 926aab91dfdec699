// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "fedsim/analysis.hpp"
#include "fedsim/batch.hpp"
#include "fedsim/client.hpp"
#include "fedsim/config_io.hpp"
#include "fedsim/errors.hpp"
#include "fedsim/harness.hpp"
#include "fedsim/hvp.hpp"
#include "fedsim/model.hpp"
#include "fedsim/oracle.hpp"
#include "fedsim/param_vector.hpp"
#include "fedsim/rng.hpp"
#include "fedsim/round_record.hpp"
#include "fedsim/server.hpp"
#include "fedsim/strategy.hpp"
#include "fedsim/suite_io.hpp"
#include "fedsim/tasks.hpp"
