#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "humor/adversary.hpp"
#include "humor/corpus.hpp"
#include "humor/losses.hpp"
#include "humor/model.hpp"
#include "humor/tape.hpp"

namespace humor {

// Training strategy toggles. Each flag independently enables one term:
//   at: adversarial divergence term (weight alpha, budget eps)
//   lc: label-noise correction of the classification loss (weight w)
//   mt: regression loss term (interactive multi-task)
//   wl: learned uncertainty weighting (otherwise s1 = s2 = 0, fixed)
struct StrategyFlags {
  bool at = false;
  bool lc = false;
  bool mt = false;
  bool wl = false;
};

struct ObjectiveConfig {
  StrategyFlags flags;
  double alpha = 1.0;
  double eps = 0.5;
  double w = 0.2;

  void validate() const {
    if (alpha < 0.0 || eps < 0.0) throw LossError("objective: alpha and eps must be >= 0");
    if (w < 0.0 || w > 1.0) throw LossError("objective: w must be in [0,1]");
  }
};

// One pre-tokenized example with its labels.
struct EncodedExample {
  TokenSeq seq;
  std::optional<int> y1;
  std::optional<double> y2;
};

// Adversarial state that must be held fixed while differentiating: the
// perturbations and the clean reference outputs. A finite-difference pass
// over the parameters reuses one frozen context so that the objective it
// probes is the same function the analytic gradient describes.
struct AdvContext {
  std::vector<Tensor> betas;  // per example; empty tensor = zero perturbation
  std::vector<CleanOutput> clean;
};

struct BatchObjective {
  Var root;         // scalar objective on the tape
  LossParts parts;  // value snapshot
  AdvContext ctx;   // populated when the adversarial term is on
};

// Builds the full training objective for one batch on one tape:
//
//   mtl(L1_corrected, L2_masked, s1, s2) + alpha * divergence(clean, adv)
//
// with each term subject to its flag. When the adversarial term is active
// and no frozen context is supplied, the supervised loss is backpropagated
// in place to obtain the embedding gradients that generate the
// perturbations; the perturbations and clean outputs then enter the graph
// as constants.
inline BatchObjective build_batch_objective(Tape& t, const ParamStore& ps,
                                            const EmbeddingConfig& cfg,
                                            std::span<const EncodedExample> batch,
                                            const ObjectiveConfig& ocfg,
                                            const AdvContext* frozen = nullptr) {
  ocfg.validate();
  if (batch.empty()) throw LossError("objective: empty batch");

  const BoundParams bp = bind_params(t, ps);

  std::vector<ExampleGraph> graphs;
  graphs.reserve(batch.size());
  for (const EncodedExample& ex : batch) graphs.push_back(forward_example(t, bp, cfg, ex.seq));

  std::vector<Var> labeled_probs;
  std::vector<int> labels;
  std::vector<Var> rated_preds;
  std::vector<double> ratings;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (batch[i].y1) {
      labeled_probs.push_back(graphs[i].probs);
      labels.push_back(*batch[i].y1);
    }
    if (batch[i].y2) {
      rated_preds.push_back(graphs[i].rating);
      ratings.push_back(*batch[i].y2);
    }
  }
  if (labeled_probs.empty()) throw LossError("objective: batch has no labeled examples");

  BatchObjective out;
  const double w_eff = ocfg.flags.lc ? ocfg.w : 0.0;
  Var l1 = ocfg.flags.lc ? corrected_ce_loss(t, labeled_probs, labels, w_eff)
                         : cross_entropy_loss(t, labeled_probs, labels);

  Var l2 = (ocfg.flags.mt && !rated_preds.empty()) ? euclidean_loss(t, rated_preds, ratings)
                                                   : t.constant(0.0);

  Var s1 = ocfg.flags.wl ? bp.s1 : t.constant(0.0);
  Var s2 = ocfg.flags.wl ? bp.s2 : t.constant(0.0);
  Var supervised = mtl_loss_node(t, l1, l2, s1, s2);

  Var root = supervised;
  double adv_value = 0.0;
  if (ocfg.flags.at) {
    if (frozen != nullptr) {
      out.ctx = *frozen;
    } else {
      t.backward(supervised);
      out.ctx.betas.reserve(batch.size());
      out.ctx.clean.reserve(batch.size());
      for (const ExampleGraph& g : graphs) {
        out.ctx.betas.push_back(make_perturbation(t.grad_tensor(g.embedded), ocfg.eps).beta);
        CleanOutput c;
        c.probs = {t.val(g.probs)[0], t.val(g.probs)[1]};
        c.rating = t.val(g.rating)[0];
        out.ctx.clean.push_back(c);
      }
    }

    // Zero perturbations leave the divergence identically zero, so only
    // perturbed examples enter the graph.
    std::vector<CleanOutput> clean_live;
    std::vector<Var> adv_probs, adv_ratings;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      if (out.ctx.betas[i].v.empty()) continue;
      const ExampleGraph ag = forward_example(t, bp, cfg, batch[i].seq, &out.ctx.betas[i]);
      clean_live.push_back(out.ctx.clean[i]);
      adv_probs.push_back(ag.probs);
      adv_ratings.push_back(ag.rating);
    }
    if (!clean_live.empty()) {
      Var div = vat_divergence_loss(t, clean_live, adv_probs, adv_ratings);
      // The divergence above averages over the perturbed subset; rescale to
      // a batch mean.
      const double subset = static_cast<double>(clean_live.size()) /
                            static_cast<double>(batch.size());
      div = t.scale(div, subset);
      adv_value = t.val_scalar(div);
      root = t.add(supervised, t.scale(div, ocfg.alpha));
    }
  }

  out.root = root;
  out.parts.l1 = t.val_scalar(l1);
  out.parts.l2 = t.val_scalar(l2);
  out.parts.adv = adv_value;
  out.parts.w = w_eff;
  out.parts.alpha = ocfg.flags.at ? ocfg.alpha : 0.0;
  out.parts.s1 = ocfg.flags.wl ? ps.at("unc_s1").v[0] : 0.0;
  out.parts.s2 = ocfg.flags.wl ? ps.at("unc_s2").v[0] : 0.0;
  out.parts.total = t.val_scalar(root);
  out.parts.labeled_count = static_cast<int>(labels.size());
  out.parts.rated_count = static_cast<int>(ratings.size());
  return out;
}

// Clean pass, perturbation construction, adversarial pass and divergence in
// one call, on a fresh tape. Returns the assembled objective; betas live in
// ctx.
inline BatchObjective adversarial_pass(Tape& t, const ParamStore& ps, const EmbeddingConfig& cfg,
                                       std::span<const EncodedExample> batch, double eps,
                                       double alpha, StrategyFlags flags = {}) {
  ObjectiveConfig ocfg;
  ocfg.flags = flags;
  ocfg.flags.at = true;
  ocfg.eps = eps;
  ocfg.alpha = alpha;
  return build_batch_objective(t, ps, cfg, batch, ocfg);
}

}  // namespace humor
