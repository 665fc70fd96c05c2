#pragma once

#include <map>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "humor/metrics.hpp"
#include "humor/trainer.hpp"

namespace humor {

struct StrategyDef {
  std::string name;
  StrategyFlags flags;
};

// The two comparison sets: classification strategies on the noisy-label
// axis, and the single-task / multi-task / weighted-loss axis.
inline std::vector<StrategyDef> classification_strategies() {
  return {
      {"baseline", {false, false, false, false}},
      {"AT", {true, false, false, false}},
      {"LC", {false, true, false, false}},
      {"AT+LC", {true, true, false, false}},
  };
}

inline std::vector<StrategyDef> multitask_strategies() {
  return {
      {"ST", {false, false, false, false}},
      {"MT", {false, false, true, false}},
      {"MT+WL", {false, false, true, true}},
  };
}

struct StrategyOutcome {
  StrategyDef def;
  std::vector<Metrics> runs;  // one per seed, in seed order
  StrategyRow row;
};

// Trains every (strategy, seed) pair on the same data and evaluates on the
// same dev set. Identical flag sets are trained once and shared between
// rows (baseline and ST are the same configuration by construction).
inline std::vector<StrategyOutcome> run_strategies(const TrainConfig& base,
                                                   std::span<const StrategyDef> defs,
                                                   const Dataset& train_set,
                                                   const Dataset& dev_set,
                                                   std::span<const std::uint64_t> seeds) {
  if (seeds.empty()) throw DataError("run_strategies: no seeds");
  std::map<std::tuple<bool, bool, bool, bool>, std::vector<Metrics>> cache;

  std::vector<StrategyOutcome> out;
  for (const StrategyDef& def : defs) {
    const auto key = std::make_tuple(def.flags.at, def.flags.lc, def.flags.mt, def.flags.wl);
    auto it = cache.find(key);
    if (it == cache.end()) {
      std::vector<Metrics> runs;
      for (const std::uint64_t seed : seeds) {
        TrainConfig cfg = base;
        cfg.flags = def.flags;
        cfg.seed = seed;
        runs.push_back(train(cfg, train_set, dev_set).fold.validation);
      }
      it = cache.emplace(key, std::move(runs)).first;
    }
    StrategyOutcome o;
    o.def = def;
    o.runs = it->second;
    o.row = aggregate_runs(def.name, o.runs);
    out.push_back(std::move(o));
  }
  return out;
}

inline std::vector<StrategyRow> rows_of(std::span<const StrategyOutcome> outcomes) {
  std::vector<StrategyRow> rows;
  rows.reserve(outcomes.size());
  for (const StrategyOutcome& o : outcomes) rows.push_back(o.row);
  return rows;
}

}  // namespace humor
