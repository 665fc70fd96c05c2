#pragma once

#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "humor/tape.hpp"
#include "humor/tensor.hpp"

namespace humor {

struct LossError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Probabilities are clipped here before every log.
inline constexpr double kProbFloor = 1e-12;

// Learned per-task noise scales, stored as s = log(sigma^2) so the
// variances stay positive by construction.
struct UncertaintyParams {
  double s1 = 0.0;
  double s2 = 0.0;
};

// Decomposed objective for one batch. `total` is reproducible from the
// other fields via recombine(); disabled strategy terms appear as zeros.
struct LossParts {
  double l1 = 0.0;     // classification loss
  double l2 = 0.0;     // regression loss (0 when multi-task is off or unrated batch)
  double adv = 0.0;    // divergence term (0 when adversarial training is off)
  double w = 0.0;      // correction weight in effect
  double alpha = 0.0;  // adversarial trade-off in effect
  double s1 = 0.0;     // log sigma1^2 in effect (0 when weighting is off)
  double s2 = 0.0;
  double total = 0.0;
  int labeled_count = 0;
  int rated_count = 0;

  double recombine() const {
    return std::exp(-s1) * l1 + 0.5 * std::exp(-s2) * l2 + 0.5 * s1 + 0.5 * s2 +
           alpha * adv;
  }
};

// ---- tape-level builders ----

// -(1/N) sum_i log p_i[y_i]
inline Var cross_entropy_loss(Tape& t, std::span<const Var> probs, std::span<const int> labels) {
  if (probs.empty() || probs.size() != labels.size())
    throw LossError("cross_entropy: empty or mismatched batch");
  Var acc{};
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw LossError("cross_entropy: label must be 0 or 1");
    Var lg = t.log(t.clamp_min(t.slice(probs[i], labels[i], 1), kProbFloor));
    acc = acc.valid() ? t.add(acc, lg) : lg;
  }
  return t.scale(t.sum(acc), -1.0 / static_cast<double>(probs.size()));
}

// -(1/N) sum_i sum_c ((1-w) y_ic + w p_ic) log p_ic, with y the one-hot
// label and p the model's own (live) probability vector. w = 0 reduces to
// cross_entropy_loss exactly.
inline Var corrected_ce_loss(Tape& t, std::span<const Var> probs, std::span<const int> labels,
                             double w) {
  if (w < 0.0 || w > 1.0) throw LossError("corrected_ce: w must be in [0,1]");
  if (probs.empty() || probs.size() != labels.size())
    throw LossError("corrected_ce: empty or mismatched batch");
  Var acc{};
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw LossError("corrected_ce: label must be 0 or 1");
    Tensor onehot(vec_shape(2));
    onehot.v[static_cast<std::size_t>(labels[i])] = 1.0 - w;
    Var coef = t.add(t.constant(onehot), t.scale(probs[i], w));
    Var term = t.sum(t.mul(coef, t.log(t.clamp_min(probs[i], kProbFloor))));
    acc = acc.valid() ? t.add(acc, term) : term;
  }
  return t.scale(acc, -1.0 / static_cast<double>(probs.size()));
}

// (1/N) sum_i (target_i - pred_i)^2
inline Var euclidean_loss(Tape& t, std::span<const Var> preds, std::span<const double> targets) {
  if (preds.empty() || preds.size() != targets.size())
    throw LossError("euclidean: empty or mismatched batch");
  Var acc{};
  for (std::size_t i = 0; i < preds.size(); ++i) {
    Var diff = t.sub(preds[i], t.constant(Tensor::vec({targets[i]})));
    Var sq = t.sum(t.square(diff));
    acc = acc.valid() ? t.add(acc, sq) : sq;
  }
  return t.scale(acc, 1.0 / static_cast<double>(preds.size()));
}

// KL(clean || adv) on class probabilities plus squared rating difference,
// both averaged over the batch. The clean side is constant: gradients flow
// only through the adversarial branch.
struct CleanOutput {
  std::array<double, 2> probs{0.5, 0.5};
  double rating = 0.0;
};

inline Var vat_divergence_loss(Tape& t, std::span<const CleanOutput> clean,
                               std::span<const Var> adv_probs, std::span<const Var> adv_ratings) {
  if (clean.empty() || clean.size() != adv_probs.size() || clean.size() != adv_ratings.size())
    throw LossError("vat_divergence: empty or mismatched batch");
  Var acc{};
  for (std::size_t i = 0; i < clean.size(); ++i) {
    const double p0 = std::max(clean[i].probs[0], kProbFloor);
    const double p1 = std::max(clean[i].probs[1], kProbFloor);
    Var const_p = t.constant(Tensor::vec({p0, p1}));
    Var const_logp = t.constant(Tensor::vec({std::log(p0), std::log(p1)}));
    Var log_q = t.log(t.clamp_min(adv_probs[i], kProbFloor));
    Var kl = t.sum(t.mul(const_p, t.sub(const_logp, log_q)));

    Var dr = t.sub(adv_ratings[i], t.constant(Tensor::vec({clean[i].rating})));
    Var sq = t.sum(t.square(dr));

    Var term = t.add(kl, sq);
    acc = acc.valid() ? t.add(acc, term) : term;
  }
  return t.scale(acc, 1.0 / static_cast<double>(clean.size()));
}

// exp(-s1) L1 + 0.5 exp(-s2) L2 + s1/2 + s2/2
inline Var mtl_loss_node(Tape& t, Var l1, Var l2, Var s1, Var s2) {
  Var term1 = t.mul(t.exp(t.scale(s1, -1.0)), l1);
  Var term2 = t.scale(t.mul(t.exp(t.scale(s2, -1.0)), l2), 0.5);
  Var reg = t.add(t.affine(s1, 0.5, 0.0), t.affine(s2, 0.5, 0.0));
  return t.add(t.add(term1, term2), reg);
}

// ---- value-level wrappers ----
// Thin shells over the tape builders so there is a single implementation
// of every formula.

namespace detail {

inline std::vector<Var> probs_as_leaves(Tape& t, std::span<const std::array<double, 2>> probs) {
  std::vector<Var> out;
  out.reserve(probs.size());
  for (const auto& p : probs) out.push_back(t.constant(Tensor::vec({p[0], p[1]})));
  return out;
}

}  // namespace detail

inline double cross_entropy(std::span<const std::array<double, 2>> probs,
                            std::span<const int> labels) {
  Tape t;
  const std::vector<Var> pv = detail::probs_as_leaves(t, probs);
  return t.val_scalar(cross_entropy_loss(t, pv, labels));
}

inline double corrected_ce(std::span<const std::array<double, 2>> probs,
                           std::span<const int> labels, double w) {
  Tape t;
  const std::vector<Var> pv = detail::probs_as_leaves(t, probs);
  return t.val_scalar(corrected_ce_loss(t, pv, labels, w));
}

inline double euclidean(std::span<const double> preds, std::span<const double> targets) {
  Tape t;
  std::vector<Var> pv;
  pv.reserve(preds.size());
  for (double p : preds) pv.push_back(t.constant(Tensor::vec({p})));
  return t.val_scalar(euclidean_loss(t, pv, targets));
}

inline double vat_divergence(std::span<const CleanOutput> clean,
                             std::span<const CleanOutput> adv) {
  Tape t;
  std::vector<Var> qp, qr;
  qp.reserve(adv.size());
  qr.reserve(adv.size());
  for (const auto& a : adv) {
    qp.push_back(t.constant(Tensor::vec({a.probs[0], a.probs[1]})));
    qr.push_back(t.constant(Tensor::vec({a.rating})));
  }
  return t.val_scalar(vat_divergence_loss(t, clean, qp, qr));
}

inline double mtl_loss(double l1, double l2, const UncertaintyParams& u) {
  if (l1 < 0.0 || l2 < 0.0) throw LossError("mtl_loss: losses must be >= 0");
  Tape t;
  return t.val_scalar(
      mtl_loss_node(t, t.constant(l1), t.constant(l2), t.constant(u.s1), t.constant(u.s2)));
}

}  // namespace humor
