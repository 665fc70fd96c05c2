#pragma once

#include <chrono>
#include <map>
#include <string>
#include <vector>

#include "humor/corpus.hpp"
#include "humor/grad_check.hpp"
#include "humor/objective.hpp"

namespace humor {

// Full-objective gradient verification: every parameter (uncertainty
// scalars included) against central finite differences, for all 16
// strategy flag combinations, on a fixed four-example batch small enough
// to finish in seconds.

struct GradCheckCombo {
  StrategyFlags flags;
  GradCheckReport report;
};

struct GradCheckSummary {
  std::vector<GradCheckCombo> combos;
  std::map<std::string, double> per_param;  // worst error per parameter, over combos
  double worst = 0.0;
  std::string worst_param;
  bool passed = false;
  double seconds = 0.0;
};

namespace detail {

struct GradCheckFixture {
  EmbeddingConfig cfg;
  ParamStore params;
  std::vector<EncodedExample> batch;
};

inline GradCheckFixture gradcheck_fixture() {
  Dataset data;
  data.examples = {
      {0, "haha what a great pun today", 1, 4.2},
      {1, "the quip about the ledger", 1, 3.1},
      {2, "quarterly audit memo form", 0, {}},
      {3, "please file the tax notice", 0, {}},
  };
  GradCheckFixture f;
  const Vocab vocab = build_vocab(data, 1);
  f.cfg = EmbeddingConfig{vocab.size(), 8, 4, 3};
  f.params = init_params(f.cfg, 2024);
  f.params.at("unc_s1").v[0] = 0.15;
  f.params.at("unc_s2").v[0] = -0.25;
  for (const Example& ex : data.examples) {
    EncodedExample e;
    e.seq = encode(ex.text, vocab, f.cfg.max_len);
    e.y1 = ex.y1;
    e.y2 = ex.y2;
    f.batch.push_back(std::move(e));
  }
  return f;
}

}  // namespace detail

// corrupt_rule is a negative-control hook for the test suite: it skews the
// objective seen by the analytic pass of the first combo, which must make
// the check fail.
inline GradCheckSummary run_full_gradcheck(double h = 1e-5, double tol = 1e-4,
                                           bool corrupt_rule = false) {
  const auto start = std::chrono::steady_clock::now();
  detail::GradCheckFixture f = detail::gradcheck_fixture();

  GradCheckSummary summary;
  for (int mask = 0; mask < 16; ++mask) {
    ObjectiveConfig oc;
    oc.flags = {bool(mask & 1), bool(mask & 2), bool(mask & 4), bool(mask & 8)};
    oc.alpha = 1.3;
    oc.eps = 0.5;
    oc.w = 0.3;

    AdvContext ctx;
    if (oc.flags.at) {
      Tape t;
      ctx = build_batch_objective(t, f.params, f.cfg, f.batch, oc).ctx;
    }
    int calls = 0;
    auto build = [&](Tape& t, const ParamStore& p) -> Var {
      Var root = build_batch_objective(t, p, f.cfg, f.batch, oc,
                                       oc.flags.at ? &ctx : nullptr)
                     .root;
      // grad_check's first call computes the analytic gradient; skewing it
      // simulates a broken gradient rule.
      if (corrupt_rule && mask == 0 && calls++ == 0) root = t.scale(root, 1.001);
      return root;
    };

    GradCheckCombo combo;
    combo.flags = oc.flags;
    combo.report = grad_check(build, f.params, h, tol);
    for (const auto& [name, err] : combo.report.per_param) {
      auto it = summary.per_param.find(name);
      if (it == summary.per_param.end() || err > it->second) summary.per_param[name] = err;
    }
    if (combo.report.max_rel_err > summary.worst) {
      summary.worst = combo.report.max_rel_err;
      summary.worst_param = combo.report.worst_param;
    }
    summary.combos.push_back(std::move(combo));
  }
  summary.passed = summary.worst <= tol;
  summary.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return summary;
}

}  // namespace humor
