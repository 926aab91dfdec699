// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "fedsim/errors.hpp"

namespace fedsim {

enum class StrategyKind {
  Fedavg,
  Fedprox,
  FedReptile,
  PerfedavgFo,
  Fedmeta,
  PfedmeMode,
  Fedsim,
  FedsimVar1,
  FedsimVar2,
  FedsimVar3,
};

inline const char* strategy_name(StrategyKind s) {
  switch (s) {
    case StrategyKind::Fedavg: return "fedavg";
    case StrategyKind::Fedprox: return "fedprox";
    case StrategyKind::FedReptile: return "fed_reptile";
    case StrategyKind::PerfedavgFo: return "perfedavg_fo";
    case StrategyKind::Fedmeta: return "fedmeta";
    case StrategyKind::PfedmeMode: return "pfedme_mode";
    case StrategyKind::Fedsim: return "fedsim";
    case StrategyKind::FedsimVar1: return "fedsim_var1";
    case StrategyKind::FedsimVar2: return "fedsim_var2";
    case StrategyKind::FedsimVar3: return "fedsim_var3";
  }
  return "?";
}

inline StrategyKind parse_strategy(const std::string& s) {
  if (s == "fedavg") return StrategyKind::Fedavg;
  if (s == "fedprox") return StrategyKind::Fedprox;
  if (s == "fed_reptile") return StrategyKind::FedReptile;
  if (s == "perfedavg_fo") return StrategyKind::PerfedavgFo;
  if (s == "fedmeta") return StrategyKind::Fedmeta;
  if (s == "pfedme_mode") return StrategyKind::PfedmeMode;
  if (s == "fedsim") return StrategyKind::Fedsim;
  if (s == "fedsim_var1") return StrategyKind::FedsimVar1;
  if (s == "fedsim_var2") return StrategyKind::FedsimVar2;
  if (s == "fedsim_var3") return StrategyKind::FedsimVar3;
  throw ConfigError("unknown strategy: " + s);
}

/// True for the strategies handled by fedsim_round (the meta-update family
/// plus the pFedMe-style mode).
inline bool is_fedsim_family(StrategyKind s) {
  switch (s) {
    case StrategyKind::Fedsim:
    case StrategyKind::FedsimVar1:
    case StrategyKind::FedsimVar2:
    case StrategyKind::FedsimVar3:
    case StrategyKind::PfedmeMode:
      return true;
    default:
      return false;
  }
}

}  // namespace fedsim
