// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "fedsim/strategy.hpp"

namespace fedsim {

/// Per-round bookkeeping. Round functions fill the counters with the cost
/// incurred in that round; the simulation loop accumulates them and attaches
/// the personalized evaluation metric at evaluation points.
struct RoundRecord {
  int round = 0;
  StrategyKind strategy = StrategyKind::Fedsim;
  double personalized_metric = 0.0;
  double theta_norm = 0.0;
  long client_grad_evals = 0;
  long server_grad_evals = 0;
  double beta_used = 0.0;
};

}  // namespace fedsim
