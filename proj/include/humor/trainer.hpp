#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "humor/corpus.hpp"
#include "humor/metrics.hpp"
#include "humor/model.hpp"
#include "humor/objective.hpp"

namespace humor {

// Non-finite loss during optimization; step is the 1-based global step at
// which it happened.
struct TrainingDiverged : std::runtime_error {
  long long step = 0;
  explicit TrainingDiverged(long long step_)
      : std::runtime_error("training diverged at step " + std::to_string(step_)), step(step_) {}
};

struct TrainConfig {
  // model
  int emb_dim = 32;
  int hidden_dim = 32;
  int max_len = 32;
  int min_freq = 1;
  // optimization
  double lr = 1e-3;
  int epochs = 6;
  int batch_size = 32;
  std::uint64_t seed = 1;
  double warmup_proportion = 0.05;  // linear lr ramp over this share of steps
  // strategies
  StrategyFlags flags;
  double eps = 0.5;
  double alpha = 1.0;
  double w = 0.2;
  int w_warmup_epochs = 1;  // epochs with w = 0 before the constant w kicks in

  void validate() const {
    if (emb_dim < 1 || hidden_dim < 1 || max_len < 1 || min_freq < 1)
      throw LossError("config: model dims must be >= 1");
    if (lr <= 0.0 || epochs < 1 || batch_size < 1)
      throw LossError("config: lr, epochs and batch_size must be positive");
    if (warmup_proportion < 0.0 || warmup_proportion > 1.0)
      throw LossError("config: warmup_proportion must be in [0,1]");
    if (w_warmup_epochs < 0) throw LossError("config: w_warmup_epochs must be >= 0");
    ObjectiveConfig oc{flags, alpha, eps, w};
    oc.validate();
  }

  ObjectiveConfig objective(int epoch /*1-based*/) const {
    ObjectiveConfig oc{flags, alpha, eps, w};
    if (epoch <= w_warmup_epochs) oc.w = 0.0;
    return oc;
  }
};

struct EpochRecord {
  int epoch = 0;       // 1-based
  LossParts parts;     // l1/l2/adv/total are step means; s1/s2 end-of-epoch
  Metrics eval;        // dev metrics (train metrics when no dev set given)
};

// A trained model with its held-out metrics; the confidence weight used in
// fusions is the held-out accuracy.
struct FoldModel {
  Model model;
  Metrics validation;
  double confidence = 0.0;
};

struct TrainResult {
  FoldModel fold;
  std::vector<EpochRecord> history;
};

// ---- evaluation ----

inline Metrics evaluate(const Model& model, const Dataset& data) {
  std::vector<int> preds, labels;
  std::vector<double> rating_preds, rating_targets;
  for (const Example& ex : data.examples) {
    if (!ex.y1) continue;
    const ModelOutput out = model.predict(ex.text);
    preds.push_back(out.predicted_class());
    labels.push_back(*ex.y1);
    if (ex.y2) {
      rating_preds.push_back(out.inference_rating());
      rating_targets.push_back(*ex.y2);
    }
  }
  if (preds.empty()) throw DataError("evaluate: dataset has no labeled examples");
  Metrics m;
  m.accuracy = accuracy_score(preds, labels);
  m.f1 = f1_score(preds, labels);
  if (!rating_preds.empty()) m.rmse = rmse_score(rating_preds, rating_targets);
  return m;
}

// ---- optimizer ----

namespace detail {

class Adam {
 public:
  Adam(double lr, double warmup_proportion, long long total_steps)
      : lr_(lr),
        warmup_steps_(static_cast<long long>(std::llround(
            warmup_proportion * static_cast<double>(total_steps)))) {}

  void step(ParamStore& params, const Tape& tape) {
    ++t_;
    const double ramp =
        warmup_steps_ > 0 ? std::min(1.0, static_cast<double>(t_) / static_cast<double>(warmup_steps_))
                          : 1.0;
    const double lr_t = lr_ * ramp;
    const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    for (const auto& [name, var] : tape.bound_params()) {
      const std::span<const double> g = tape.grad(var);
      Tensor& p = params.at(name);
      Tensor& m = moment(m1_, name, p.shape);
      Tensor& v = moment(m2_, name, p.shape);
      for (std::size_t i = 0; i < p.v.size(); ++i) {
        m.v[i] = kBeta1 * m.v[i] + (1.0 - kBeta1) * g[i];
        v.v[i] = kBeta2 * v.v[i] + (1.0 - kBeta2) * g[i] * g[i];
        const double mhat = m.v[i] / bc1;
        const double vhat = v.v[i] / bc2;
        p.v[i] -= lr_t * mhat / (std::sqrt(vhat) + kEps);
      }
    }
  }

  long long steps_taken() const { return t_; }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

  Tensor& moment(std::map<std::string, Tensor>& store, const std::string& name, Shape s) {
    auto it = store.find(name);
    if (it == store.end()) it = store.emplace(name, Tensor(s)).first;
    return it->second;
  }

  double lr_;
  long long warmup_steps_;
  long long t_ = 0;
  std::map<std::string, Tensor> m1_, m2_;
};

inline std::vector<EncodedExample> encode_dataset(const Dataset& data, const Vocab& vocab,
                                                  int max_len) {
  std::vector<EncodedExample> out;
  out.reserve(data.size());
  for (const Example& ex : data.examples) {
    EncodedExample e;
    e.seq = encode(ex.text, vocab, max_len);
    e.y1 = ex.y1;
    e.y2 = ex.y2;
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace detail

// ---- training loop ----

// Deterministic for a given (config, data): parameter init, shuffle order
// and every update are driven by config.seed alone.
inline TrainResult train(const TrainConfig& config, const Dataset& train_set,
                         const Dataset& dev_set) {
  config.validate();
  if (train_set.size() == 0) throw DataError("train: empty training set");

  Model model;
  model.vocab = build_vocab(train_set, config.min_freq);
  model.config = EmbeddingConfig{model.vocab.size(), config.max_len, config.emb_dim,
                                 config.hidden_dim};
  model.params = init_params(model.config, config.seed);

  std::vector<EncodedExample> examples =
      detail::encode_dataset(train_set, model.vocab, config.max_len);

  const long long steps_per_epoch =
      (static_cast<long long>(examples.size()) + config.batch_size - 1) / config.batch_size;
  detail::Adam adam(config.lr, config.warmup_proportion,
                    steps_per_epoch * config.epochs);
  Rng shuffle_rng(config.seed ^ 0x5D5D5D5D5D5D5D5Dull);

  TrainResult result;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const ObjectiveConfig ocfg = config.objective(epoch);
    shuffle_rng.shuffle(examples);

    LossParts sums;
    long long batches = 0;
    for (std::size_t begin = 0; begin < examples.size(); begin += config.batch_size) {
      const std::size_t end = std::min(examples.size(), begin + config.batch_size);
      const std::span<const EncodedExample> batch(examples.data() + begin, end - begin);
      try {
        Tape tape;
        BatchObjective obj = build_batch_objective(tape, model.params, model.config, batch, ocfg);
        tape.backward(obj.root);
        adam.step(model.params, tape);
        sums.l1 += obj.parts.l1;
        sums.l2 += obj.parts.l2;
        sums.adv += obj.parts.adv;
        sums.total += obj.parts.total;
        sums.labeled_count += obj.parts.labeled_count;
        sums.rated_count += obj.parts.rated_count;
        ++batches;
      } catch (const NonFiniteError&) {
        throw TrainingDiverged(adam.steps_taken() + 1);
      }
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.parts.l1 = sums.l1 / static_cast<double>(batches);
    rec.parts.l2 = sums.l2 / static_cast<double>(batches);
    rec.parts.adv = sums.adv / static_cast<double>(batches);
    rec.parts.total = sums.total / static_cast<double>(batches);
    rec.parts.w = ocfg.flags.lc ? ocfg.w : 0.0;
    rec.parts.alpha = ocfg.flags.at ? ocfg.alpha : 0.0;
    rec.parts.s1 = ocfg.flags.wl ? model.params.at("unc_s1").v[0] : 0.0;
    rec.parts.s2 = ocfg.flags.wl ? model.params.at("unc_s2").v[0] : 0.0;
    rec.parts.labeled_count = sums.labeled_count;
    rec.parts.rated_count = sums.rated_count;
    rec.eval = evaluate(model, dev_set.size() > 0 ? dev_set : train_set);
    result.history.push_back(rec);
  }

  result.fold.model = std::move(model);
  result.fold.validation = result.history.back().eval;
  result.fold.confidence = result.fold.validation.accuracy;
  return result;
}

// ---- cross-validation ----

// One model per (fold x seed); folds are re-drawn per seed, so each seed's
// held-out parts partition the dataset.
inline std::vector<FoldModel> cross_validate(const TrainConfig& config, const Dataset& data,
                                             int k, std::span<const std::uint64_t> seeds) {
  if (seeds.empty()) throw DataError("cross_validate: no seeds");
  std::vector<FoldModel> models;
  for (const std::uint64_t seed : seeds) {
    const std::vector<Fold> folds = kfold_split(data, k, seed);
    for (std::size_t f = 0; f < folds.size(); ++f) {
      TrainConfig cfg = config;
      cfg.seed = seed * 1000003ull + f;
      models.push_back(std::move(train(cfg, folds[f].train, folds[f].held_out).fold));
    }
  }
  return models;
}

// ---- ensembling ----

// Confidence-weighted collection of fold models; weights are normalized to
// sum to 1 (uniform fallback when every confidence is zero).
struct EnsembleSpec {
  std::vector<FoldModel> members;
  std::vector<double> weights;

  static EnsembleSpec from_models(std::vector<FoldModel> models) {
    if (models.empty()) throw DataError("ensemble: no models");
    EnsembleSpec spec;
    spec.weights.resize(models.size());
    double total = 0.0;
    for (const FoldModel& m : models) total += m.confidence;
    for (std::size_t i = 0; i < models.size(); ++i)
      spec.weights[i] = total > 0.0 ? models[i].confidence / total
                                    : 1.0 / static_cast<double>(models.size());
    spec.members = std::move(models);
    return spec;
  }
};

// Weighted arithmetic mean of member probabilities (still on the simplex)
// and of member inference ratings.
inline ModelOutput ensemble_predict(const EnsembleSpec& spec, const std::string& text) {
  if (spec.members.empty()) throw DataError("ensemble_predict: empty ensemble");
  ModelOutput fused;
  fused.class_probs = {0.0, 0.0};
  fused.rating = 0.0;
  for (std::size_t i = 0; i < spec.members.size(); ++i) {
    const ModelOutput out = spec.members[i].model.predict(text);
    fused.class_probs[0] += spec.weights[i] * out.class_probs[0];
    fused.class_probs[1] += spec.weights[i] * out.class_probs[1];
    fused.rating += spec.weights[i] * out.inference_rating();
  }
  return fused;
}

// ---- pseudo-labeling ----

struct PseudoSelection {
  Dataset selected;                          // y1 set from the threshold rule, y2 absent
  std::vector<std::pair<long long, double>> fused;  // (id, fused p1) for every input row
};

// Keeps rows whose fused positive probability is strictly above hi or
// strictly below lo.
inline PseudoSelection pseudo_label(const EnsembleSpec& spec, const Dataset& unlabeled,
                                    double lo, double hi) {
  if (spec.members.empty()) throw DataError("pseudo_label: empty ensemble");
  if (!(lo >= 0.0 && lo < hi && hi <= 1.0))
    throw DataError("pseudo_label: need 0 <= lo < hi <= 1");
  PseudoSelection out;
  out.selected.split = Split::kTrain;
  for (const Example& ex : unlabeled.examples) {
    const double p = ensemble_predict(spec, ex.text).class_probs[1];
    out.fused.emplace_back(ex.id, p);
    if (p > hi || p < lo) {
      Example sel;
      sel.id = ex.id;
      sel.text = ex.text;
      sel.y1 = p > hi ? 1 : 0;
      out.selected.examples.push_back(std::move(sel));
    }
  }
  return out;
}

// ---- full pipeline ----

struct PipelineReport {
  std::size_t train_count = 0;
  std::size_t unlabeled_count = 0;
  std::size_t pseudo_count = 0;
  std::size_t stage1_models = 0;
  std::size_t stage2_models = 0;
  std::size_t selected_models = 0;
  double lo = 0.0, hi = 0.0;
  std::vector<std::pair<long long, double>> fused;  // logged fused probabilities
  Metrics final_metrics;                            // confidence-weighted mean of
                                                    // selected models' held-out metrics
};

struct PipelineResult {
  EnsembleSpec final_ensemble;
  PipelineReport report;
};

// Pseudo-labeled rows are re-identified into their own id namespace before
// mixing, so they can never collide with original training ids.
inline constexpr long long kPseudoIdOffset = 10'000'000;

// Cross-validate, pseudo-label the unlabeled set with the fused ensemble,
// retrain on the mixed set, then keep the better half of the retrained
// models (by held-out accuracy) as the final confidence-weighted ensemble.
inline PipelineResult full_pipeline(const TrainConfig& config, const Dataset& train_set,
                                    const Dataset& unlabeled, int k,
                                    std::span<const std::uint64_t> seeds, double lo, double hi) {
  PipelineResult result;
  result.report.train_count = train_set.size();
  result.report.unlabeled_count = unlabeled.size();
  result.report.lo = lo;
  result.report.hi = hi;

  std::vector<FoldModel> stage1 = cross_validate(config, train_set, k, seeds);
  result.report.stage1_models = stage1.size();
  const EnsembleSpec fused_ensemble = EnsembleSpec::from_models(std::move(stage1));

  PseudoSelection pseudo = pseudo_label(fused_ensemble, strip_labels(unlabeled), lo, hi);
  result.report.pseudo_count = pseudo.selected.size();
  result.report.fused = std::move(pseudo.fused);

  Dataset mixed = train_set;
  for (Example ex : pseudo.selected.examples) {
    ex.id += kPseudoIdOffset;
    mixed.examples.push_back(std::move(ex));
  }

  std::vector<FoldModel> stage2 = cross_validate(config, mixed, k, seeds);
  result.report.stage2_models = stage2.size();

  std::vector<std::size_t> order(stage2.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return stage2[a].validation.accuracy > stage2[b].validation.accuracy;
  });
  const std::size_t keep = (stage2.size() + 1) / 2;
  std::vector<FoldModel> selected;
  selected.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) selected.push_back(std::move(stage2[order[i]]));
  result.report.selected_models = selected.size();

  double wsum = 0.0, acc = 0.0, f1 = 0.0, rmse = 0.0;
  bool any_rmse = !selected.empty();
  for (const FoldModel& m : selected) {
    const double wgt = std::max(m.confidence, 0.0);
    wsum += wgt;
    acc += wgt * m.validation.accuracy;
    f1 += wgt * m.validation.f1;
    if (m.validation.rmse) rmse += wgt * *m.validation.rmse;
    else any_rmse = false;
  }
  if (wsum > 0.0) {
    result.report.final_metrics.accuracy = acc / wsum;
    result.report.final_metrics.f1 = f1 / wsum;
    if (any_rmse) result.report.final_metrics.rmse = rmse / wsum;
  }

  result.final_ensemble = EnsembleSpec::from_models(std::move(selected));
  return result;
}

}  // namespace humor
