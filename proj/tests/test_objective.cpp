#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "humor/adversary.hpp"
#include "humor/grad_check.hpp"
#include "humor/objective.hpp"
#include "humor/rng.hpp"

using namespace humor;

namespace {

// Four labeled examples (two rated) over a tiny vocabulary.
struct TinySetup {
  EmbeddingConfig cfg;
  ParamStore params;
  std::vector<EncodedExample> batch;
};

TinySetup tiny_setup(std::uint64_t seed = 99) {
  Dataset data;
  data.examples = {
      {0, "haha what a great pun today", 1, 4.2},
      {1, "the quip about the ledger", 1, 3.1},
      {2, "quarterly audit memo form", 0, {}},
      {3, "please file the tax notice", 0, {}},
  };
  TinySetup s;
  Vocab vocab = build_vocab(data, 1);
  s.cfg = EmbeddingConfig{vocab.size(), 8, 4, 3};
  s.params = init_params(s.cfg, seed);
  for (const Example& ex : data.examples) {
    EncodedExample e;
    e.seq = encode(ex.text, vocab, s.cfg.max_len);
    e.y1 = ex.y1;
    e.y2 = ex.y2;
    s.batch.push_back(std::move(e));
  }
  return s;
}

ObjectiveConfig config_for(bool at, bool lc, bool mt, bool wl) {
  ObjectiveConfig oc;
  oc.flags = {at, lc, mt, wl};
  oc.alpha = 1.3;
  oc.eps = 0.5;
  oc.w = 0.3;
  return oc;
}

}  // namespace

TEST_CASE("make_perturbation") {
  SECTION("unit normalization") {
    Tensor g = Tensor::vec({3.0, 4.0});
    const Perturbation p = make_perturbation(g, 1.0);
    CHECK(p.beta.v[0] == Catch::Approx(0.6).margin(1e-15));
    CHECK(p.beta.v[1] == Catch::Approx(0.8).margin(1e-15));
  }

  SECTION("degenerate gradient gives the zero perturbation") {
    Tensor g(mat_shape(3, 2));
    const Perturbation p = make_perturbation(g, 1.0);
    CHECK(p.is_zero());
  }

  SECTION("norm budget over random gradients") {
    Rng rng(1234);
    for (int trial = 0; trial < 1000; ++trial) {
      const int n = 1 + static_cast<int>(rng.below(6));
      const int d = 1 + static_cast<int>(rng.below(6));
      Tensor g(mat_shape(n, d));
      for (auto& x : g.v) x = rng.uniform(-3.0, 3.0);
      const double eps = rng.uniform(0.0, 2.0);
      const Perturbation p = make_perturbation(g, eps);
      if (p.is_zero()) {
        CHECK((eps == 0.0 || g.l2norm() < 1e-12));
      } else {
        CHECK(std::abs(p.beta.l2norm() - eps) < 1e-9);
      }
    }
  }

  SECTION("negative eps rejected") {
    CHECK_THROWS_AS(make_perturbation(Tensor::vec({1.0}), -0.1), ModelError);
  }
}

TEST_CASE("one-dimensional ascent direction") {
  // Scalar logistic toy: x is the "embedding", loss = -log sigmoid(w(x+b)).
  // Oracle: exhaustive sweep of beta over [-eps, eps] confirms the
  // fast-gradient choice beta = eps * sign(g) attains the maximum.
  Rng rng(52);
  for (int trial = 0; trial < 25; ++trial) {
    const double wgt = rng.uniform(-2.0, 2.0);
    const double x0 = rng.uniform(-1.0, 1.0);
    const int label = static_cast<int>(rng.below(2));
    const double eps = 0.4;
    if (std::abs(wgt) < 1e-3) continue;

    auto loss_at = [&](double beta) {
      const double z = wgt * (x0 + beta);
      const double p1 = 1.0 / (1.0 + std::exp(-z));
      const double p = label == 1 ? p1 : 1.0 - p1;
      return -std::log(std::max(p, 1e-12));
    };

    // Gradient of the loss in x, via the tape.
    ParamStore ps;
    ps.add("x", Tensor::vec({x0}));
    Tape t;
    Var x = t.param(ps, "x");
    Var z = t.scale(x, wgt);
    Var p1 = t.sigmoid(z);
    Var p = label == 1 ? p1 : t.affine(p1, -1.0, 1.0);
    Var loss = t.scale(t.log(t.clamp_min(p, 1e-12)), -1.0);
    t.backward(t.sum(loss));
    const Tensor g = t.param_grads().at("x");

    const Perturbation beta = make_perturbation(g, eps);
    REQUIRE_FALSE(beta.is_zero());
    const double adv_loss = loss_at(beta.beta.v[0]);

    CHECK(adv_loss > loss_at(0.0));
    for (double b = -eps; b <= eps; b += eps / 100.0)
      CHECK(adv_loss >= loss_at(b) - 1e-9);
  }
}

TEST_CASE("objective flag identities") {
  TinySetup s = tiny_setup();

  auto total_with = [&](ObjectiveConfig oc) {
    Tape t;
    return build_batch_objective(t, s.params, s.cfg, s.batch, oc).parts;
  };

  SECTION("all flags off equals plain cross entropy") {
    const LossParts parts = total_with(config_for(false, false, false, false));
    std::vector<std::array<double, 2>> probs;
    std::vector<int> labels;
    Model m{s.cfg, Vocab{}, s.params};
    for (const EncodedExample& ex : s.batch) {
      probs.push_back(m.predict_seq(ex.seq).class_probs);
      labels.push_back(*ex.y1);
    }
    CHECK(parts.total == Catch::Approx(cross_entropy(probs, labels)).margin(1e-12));
    CHECK(parts.total == parts.l1);
    CHECK(parts.l2 == 0.0);
    CHECK(parts.adv == 0.0);
  }

  SECTION("correction with w = 0 equals plain cross entropy") {
    ObjectiveConfig lc_on = config_for(false, true, false, false);
    lc_on.w = 0.0;
    const ObjectiveConfig lc_off = config_for(false, false, false, false);
    CHECK(total_with(lc_on).total == total_with(lc_off).total);
  }

  SECTION("weighting off makes the total L1 + L2/2") {
    const LossParts parts = total_with(config_for(false, false, true, false));
    CHECK(parts.total == Catch::Approx(parts.l1 + 0.5 * parts.l2).margin(1e-12));
    CHECK(parts.l2 > 0.0);
  }

  SECTION("zero eps adversarial pass equals the clean pass") {
    ObjectiveConfig at_on = config_for(true, false, false, false);
    at_on.eps = 0.0;
    const LossParts with_at = total_with(at_on);
    const LossParts without = total_with(config_for(false, false, false, false));
    CHECK(with_at.total == without.total);
    CHECK(with_at.adv == 0.0);
  }

  SECTION("rated-empty batch keeps the regression term at zero") {
    std::vector<EncodedExample> unrated = s.batch;
    for (auto& ex : unrated) ex.y2.reset();
    Tape t;
    const LossParts parts =
        build_batch_objective(t, s.params, s.cfg, unrated, config_for(false, false, true, true))
            .parts;
    CHECK(parts.l2 == 0.0);
    CHECK(std::isfinite(parts.total));
  }

  SECTION("batch with no labeled examples is an error") {
    std::vector<EncodedExample> unlabeled = s.batch;
    for (auto& ex : unlabeled) {
      ex.y1.reset();
      ex.y2.reset();
    }
    Tape t;
    CHECK_THROWS_AS(
        build_batch_objective(t, s.params, s.cfg, unlabeled, config_for(false, false, false, false)),
        LossError);
  }

  SECTION("total recombines from the parts") {
    for (int mask = 0; mask < 16; ++mask) {
      const LossParts parts =
          total_with(config_for(mask & 1, mask & 2, mask & 4, mask & 8));
      CHECK(parts.total == Catch::Approx(parts.recombine()).margin(1e-12));
    }
  }
}

TEST_CASE("adversarial divergence behavior") {
  TinySetup s = tiny_setup();

  SECTION("positive divergence for a perturbed generic model") {
    Tape t;
    const BatchObjective obj = adversarial_pass(t, s.params, s.cfg, s.batch, 0.5, 1.0);
    CHECK(obj.parts.adv > 0.0);
    bool any_nonzero = false;
    for (const Tensor& b : obj.ctx.betas) any_nonzero |= !b.v.empty();
    CHECK(any_nonzero);
  }

  SECTION("divergence is non-decreasing in eps on a frozen model") {
    double prev = -1.0;
    for (const double eps : {0.0, 0.1, 0.5}) {
      Tape t;
      const BatchObjective obj = adversarial_pass(t, s.params, s.cfg, s.batch, eps, 1.0);
      CHECK(obj.parts.adv >= prev);
      prev = obj.parts.adv;
    }
  }

  SECTION("emitted perturbations sit on the eps sphere") {
    Tape t;
    const BatchObjective obj = adversarial_pass(t, s.params, s.cfg, s.batch, 0.5, 1.0);
    for (const Tensor& b : obj.ctx.betas)
      if (!b.v.empty()) CHECK(std::abs(b.l2norm() - 0.5) < 1e-9);
  }
}

TEST_CASE("interactive coupling: the rating loss reaches the classifier") {
  TinySetup s = tiny_setup(7);

  // L2-only objective; its gradient w.r.t. the classifier weights must be
  // nonzero because the rating head consumes the class probabilities.
  auto build = [&](Tape& t, const ParamStore& p) -> Var {
    const BoundParams bp = bind_params(t, p);
    std::vector<Var> preds;
    std::vector<double> targets;
    for (const EncodedExample& ex : s.batch) {
      const ExampleGraph g = forward_example(t, bp, s.cfg, ex.seq);
      if (ex.y2) {
        preds.push_back(g.rating);
        targets.push_back(*ex.y2);
      }
    }
    return euclidean_loss(t, preds, targets);
  };

  Tape t;
  Var root = build(t, s.params);
  t.backward(root);
  const Tensor cls_grad = t.param_grads().at("cls_w");
  double max_abs = 0.0;
  for (double g : cls_grad.v) max_abs = std::max(max_abs, std::abs(g));
  CHECK(max_abs > 1e-8);

  // And the analytic coupling gradient agrees with finite differences.
  ParamStore params = s.params;
  const GradCheckReport rep = grad_check(build, params, 1e-5, 1e-4);
  CHECK(rep.passed);
}

TEST_CASE("full objective gradient check across all flag combinations") {
  TinySetup s = tiny_setup(123);
  // Nonzero uncertainty scalars so their gradients are exercised.
  s.params.at("unc_s1").v[0] = 0.15;
  s.params.at("unc_s2").v[0] = -0.25;

  for (int mask = 0; mask < 16; ++mask) {
    const ObjectiveConfig oc = config_for(mask & 1, mask & 2, mask & 4, mask & 8);

    // Freeze the adversarial context at the base point so the probed
    // function matches the one the analytic gradient describes.
    AdvContext ctx;
    if (oc.flags.at) {
      Tape t;
      ctx = build_batch_objective(t, s.params, s.cfg, s.batch, oc).ctx;
    }
    auto build = [&](Tape& t, const ParamStore& p) -> Var {
      return build_batch_objective(t, p, s.cfg, s.batch, oc, oc.flags.at ? &ctx : nullptr).root;
    };

    GradCheckReport rep = grad_check(build, s.params, 1e-5, 1e-4);
    INFO("flags at=" << oc.flags.at << " lc=" << oc.flags.lc << " mt=" << oc.flags.mt
                     << " wl=" << oc.flags.wl << " worst " << rep.worst_param << "["
                     << rep.worst_entry << "] err " << rep.max_rel_err);
    CHECK(rep.passed);

    if (oc.flags.wl) {
      CHECK(rep.per_param.count("unc_s1") == 1);
      CHECK(rep.per_param.count("unc_s2") == 1);
    }
  }
}
