#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "humor/adversary.hpp"
#include "humor/corpus.hpp"
#include "humor/model.hpp"
#include "humor/rng.hpp"

using namespace humor;

namespace {

EmbeddingConfig tiny_config(int vocab_size) {
  EmbeddingConfig cfg;
  cfg.vocab_size = vocab_size;
  cfg.max_len = 8;
  cfg.emb_dim = 5;
  cfg.hidden_dim = 4;
  return cfg;
}

TokenSeq seq_of(std::initializer_list<int> ids, int max_len) {
  TokenSeq s;
  s.ids.assign(ids);
  s.ids.resize(static_cast<std::size_t>(max_len), Vocab::kPad);
  s.segments.assign(static_cast<std::size_t>(max_len), 0);
  s.n = static_cast<int>(ids.size());
  return s;
}

void zero_param(ParamStore& ps, const std::string& name) {
  for (auto& x : ps.at(name).v) x = 0.0;
}

void zero_gru(ParamStore& ps, const std::string& prefix) {
  for (const char* gate : {"z", "r", "h"}) {
    zero_param(ps, prefix + "_w" + std::string(gate));
    zero_param(ps, prefix + "_u" + std::string(gate));
    zero_param(ps, prefix + "_b" + std::string(gate));
  }
}

}  // namespace

TEST_CASE("embed") {
  const EmbeddingConfig cfg = tiny_config(6);
  ParamStore ps = init_params(cfg, 42);
  const TokenSeq seq = seq_of({2, 4, 1}, cfg.max_len);

  SECTION("zero perturbation is the three-way sum, additivity is exact") {
    Tape t;
    BoundParams bp = bind_params(t, ps);
    Var base = embed(t, bp, seq, nullptr);

    Tensor beta(mat_shape(seq.n, cfg.emb_dim));
    Rng rng(3);
    for (auto& x : beta.v) x = rng.uniform(-0.5, 0.5);
    Var shifted = embed(t, bp, seq, &beta);

    const Tensor base_t = t.val_tensor(base);
    const Tensor shifted_t = t.val_tensor(shifted);
    for (std::size_t i = 0; i < base_t.v.size(); ++i)
      CHECK(shifted_t.v[i] == base_t.v[i] + beta.v[i]);  // bitwise additivity

    // Direct three-way sum.
    for (int pos = 0; pos < seq.n; ++pos)
      for (int jdx = 0; jdx < cfg.emb_dim; ++jdx) {
        const double expect = ps.at("emb_tok").at(seq.ids[static_cast<std::size_t>(pos)], jdx) +
                              ps.at("emb_pos").at(pos, jdx) + ps.at("emb_seg").at(0, jdx);
        CHECK(base_t.at(pos, jdx) == expect);
      }
  }

  SECTION("normalized perturbation lands on the eps sphere") {
    Tensor g(mat_shape(seq.n, cfg.emb_dim));
    Rng rng(5);
    for (auto& x : g.v) x = rng.uniform(-1.0, 1.0);
    const double eps = 0.7;
    const Perturbation p = make_perturbation(g, eps);

    Tape t;
    BoundParams bp = bind_params(t, ps);
    Var base = embed(t, bp, seq, nullptr);
    Var shifted = embed(t, bp, seq, &p.beta);
    Tensor diff = t.val_tensor(shifted);
    const Tensor base_t = t.val_tensor(base);
    for (std::size_t i = 0; i < diff.v.size(); ++i) diff.v[i] -= base_t.v[i];
    CHECK(std::abs(diff.l2norm() - eps) < 1e-9);
  }

  SECTION("zero tables pass the perturbation through") {
    ParamStore zeroed = init_params(cfg, 1);
    zero_param(zeroed, "emb_tok");
    zero_param(zeroed, "emb_pos");
    zero_param(zeroed, "emb_seg");
    Tensor beta(mat_shape(seq.n, cfg.emb_dim));
    Rng rng(9);
    for (auto& x : beta.v) x = rng.uniform(-1.0, 1.0);

    Tape t;
    BoundParams bp = bind_params(t, zeroed);
    Var out = embed(t, bp, seq, &beta);
    CHECK(t.val_tensor(out).v == beta.v);
  }

  SECTION("empty sequence and shape mismatch are errors") {
    Tape t;
    BoundParams bp = bind_params(t, ps);
    TokenSeq empty = seq_of({}, cfg.max_len);
    CHECK_THROWS_AS(embed(t, bp, empty, nullptr), ModelError);

    Tensor bad(mat_shape(seq.n + 1, cfg.emb_dim));
    CHECK_THROWS_AS(embed(t, bp, seq, &bad), ModelError);
  }
}

TEST_CASE("encode_states") {
  const EmbeddingConfig cfg = tiny_config(6);

  SECTION("single step pools the two single states") {
    ParamStore ps = init_params(cfg, 2);
    Tape t;
    BoundParams bp = bind_params(t, ps);
    const TokenSeq seq = seq_of({3}, cfg.max_len);
    Var emb = embed(t, bp, seq, nullptr);
    Var pooled{};
    const std::vector<Var> states = encode_states(t, bp.enc1_f, bp.enc1_b, emb, 1,
                                                  cfg.hidden_dim, &pooled);
    REQUIRE(states.size() == 1);
    CHECK(t.val_tensor(states[0]).v == t.val_tensor(pooled).v);
  }

  SECTION("all-zero weights and inputs give a zero pooled state") {
    ParamStore ps = init_params(cfg, 2);
    zero_param(ps, "emb_tok");
    zero_param(ps, "emb_pos");
    zero_param(ps, "emb_seg");
    zero_gru(ps, "enc1_f");
    zero_gru(ps, "enc1_b");

    Tape t;
    BoundParams bp = bind_params(t, ps);
    const TokenSeq seq = seq_of({1, 2, 3}, cfg.max_len);
    Var emb = embed(t, bp, seq, nullptr);
    Var pooled{};
    encode_states(t, bp.enc1_f, bp.enc1_b, emb, 3, cfg.hidden_dim, &pooled);
    for (double x : t.val(pooled)) CHECK(x == 0.0);
  }

  SECTION("reversal mirror: swapped directions on reversed input") {
    // Oracle: rerun with the forward/backward weight roles exchanged.
    ParamStore ps = init_params(cfg, 7);
    ParamStore mirrored = init_params(cfg, 7);
    for (const char* gate : {"z", "r", "h"})
      for (const char* kind : {"w", "u", "b"}) {
        const std::string suffix = std::string("_") + kind + gate;
        mirrored.at("enc1_f" + suffix) = ps.at("enc1_b" + suffix);
        mirrored.at("enc1_b" + suffix) = ps.at("enc1_f" + suffix);
      }

    // Token + position + segment sums are position dependent; feed raw
    // per-position inputs through a constant embedding instead.
    const TokenSeq fwd_seq = seq_of({2, 3, 4, 5}, cfg.max_len);
    TokenSeq rev_seq = fwd_seq;
    std::reverse(rev_seq.ids.begin(), rev_seq.ids.begin() + fwd_seq.n);
    zero_param(ps, "emb_pos");
    zero_param(mirrored, "emb_pos");

    Tape t1;
    BoundParams bp1 = bind_params(t1, ps);
    Var emb1 = embed(t1, bp1, fwd_seq, nullptr);
    Var pooled1{};
    const std::vector<Var> states1 =
        encode_states(t1, bp1.enc1_f, bp1.enc1_b, emb1, fwd_seq.n, cfg.hidden_dim, &pooled1);

    Tape t2;
    BoundParams bp2 = bind_params(t2, mirrored);
    Var emb2 = embed(t2, bp2, rev_seq, nullptr);
    Var pooled2{};
    const std::vector<Var> states2 =
        encode_states(t2, bp2.enc1_f, bp2.enc1_b, emb2, rev_seq.n, cfg.hidden_dim, &pooled2);

    // Forward states of the reversal (mirrored params) equal backward
    // states of the original, position by position.
    const int n = fwd_seq.n;
    const int h = cfg.hidden_dim;
    for (int i = 0; i < n; ++i) {
      const Tensor orig = t1.val_tensor(states1[static_cast<std::size_t>(i)]);
      const Tensor mirr = t2.val_tensor(states2[static_cast<std::size_t>(n - 1 - i)]);
      for (int j = 0; j < h; ++j) {
        CHECK(orig.v[static_cast<std::size_t>(j)] ==
              Catch::Approx(mirr.v[static_cast<std::size_t>(h + j)]).margin(1e-12));
        CHECK(orig.v[static_cast<std::size_t>(h + j)] ==
              Catch::Approx(mirr.v[static_cast<std::size_t>(j)]).margin(1e-12));
      }
    }
  }
}

TEST_CASE("classify") {
  const EmbeddingConfig cfg = tiny_config(6);

  SECTION("zero weights and bias give the uniform distribution") {
    ParamStore ps = init_params(cfg, 1);
    zero_param(ps, "cls_w");
    zero_param(ps, "cls_b");
    Tape t;
    BoundParams bp = bind_params(t, ps);
    Var pooled = t.input(Tensor::vec(std::vector<double>(2 * cfg.hidden_dim, 0.3)));
    Var probs = classify(t, bp, pooled);
    CHECK(t.val(probs)[0] == 0.5);
    CHECK(t.val(probs)[1] == 0.5);
  }

  SECTION("saturated logits") {
    Tape t;
    Var probs = t.softmax(t.input(Tensor::vec({10.0, -10.0})));
    CHECK(t.val(probs)[0] > 0.9999);
  }

  SECTION("probabilities sum to one") {
    ParamStore ps = init_params(cfg, 5);
    Rng rng(17);
    for (int trial = 0; trial < 20; ++trial) {
      Tape t;
      BoundParams bp = bind_params(t, ps);
      Tensor pooled(vec_shape(2 * cfg.hidden_dim));
      for (auto& x : pooled.v) x = rng.uniform(-3.0, 3.0);
      Var probs = classify(t, bp, t.input(pooled));
      CHECK(std::abs(t.val(probs)[0] + t.val(probs)[1] - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("rate") {
  const EmbeddingConfig cfg = tiny_config(6);
  const TokenSeq seq = seq_of({2, 3, 4}, cfg.max_len);

  SECTION("zero second layer reduces to the bias") {
    ParamStore ps = init_params(cfg, 3);
    zero_gru(ps, "enc2_f");
    zero_gru(ps, "enc2_b");
    zero_param(ps, "reg_w");
    ps.at("reg_b").v[0] = 1.25;

    Tape t;
    BoundParams bp = bind_params(t, ps);
    const ExampleGraph g = forward_example(t, bp, cfg, seq);
    CHECK(t.val(g.rating)[0] == 1.25);
  }

  SECTION("the concatenated probability path is live") {
    // Same hidden states, different class distributions: the ratings must
    // differ for generic weights.
    ParamStore ps = init_params(cfg, 11);
    Tape t;
    BoundParams bp = bind_params(t, ps);
    Var emb = embed(t, bp, seq, nullptr);
    Var pooled{};
    const std::vector<Var> states =
        encode_states(t, bp.enc1_f, bp.enc1_b, emb, seq.n, cfg.hidden_dim, &pooled);
    Var beta0 = rate(t, bp, states, t.input(Tensor::vec({1.0, 0.0})), cfg.hidden_dim);
    Var beta1 = rate(t, bp, states, t.input(Tensor::vec({0.0, 1.0})), cfg.hidden_dim);
    CHECK(t.val(beta0)[0] != t.val(beta1)[0]);
  }

  SECTION("inference clamp") {
    ModelOutput out;
    out.rating = 7.3;
    CHECK(out.inference_rating() == 5.0);
    out.rating = -0.4;
    CHECK(out.inference_rating() == 0.0);
    out.rating = 3.3;
    CHECK(out.inference_rating() == 3.3);
  }
}

TEST_CASE("forward_example") {
  const EmbeddingConfig cfg = tiny_config(8);
  ParamStore ps = init_params(cfg, 23);

  SECTION("deterministic outputs") {
    const TokenSeq seq = seq_of({2, 5, 7, 1}, cfg.max_len);
    Model m{cfg, Vocab{}, ps};
    const ModelOutput a = m.predict_seq(seq);
    const ModelOutput b = m.predict_seq(seq);
    CHECK(a.class_probs == b.class_probs);
    CHECK(a.rating == b.rating);
  }

  SECTION("examples in a batch do not interact") {
    const TokenSeq seq = seq_of({3, 3, 6}, cfg.max_len);
    Tape t;
    BoundParams bp = bind_params(t, ps);
    const ExampleGraph g1 = forward_example(t, bp, cfg, seq);
    const ExampleGraph g2 = forward_example(t, bp, cfg, seq);
    CHECK(t.val_tensor(g1.probs).v == t.val_tensor(g2.probs).v);
    CHECK(t.val(g1.rating)[0] == t.val(g2.rating)[0]);
  }

  SECTION("prediction threshold is 0.5 with ties positive") {
    ModelOutput out;
    out.class_probs = {0.5, 0.5};
    CHECK(out.predicted_class() == 1);
    out.class_probs = {0.51, 0.49};
    CHECK(out.predicted_class() == 0);
  }
}

TEST_CASE("checkpoint round-trip reproduces outputs bit-exactly") {
  const EmbeddingConfig cfg = tiny_config(40);
  Model m;
  m.config = cfg;
  Dataset d = synth_generate(30, 77);
  m.vocab = build_vocab(d, 1);
  m.config.vocab_size = m.vocab.size();
  m.params = init_params(m.config, 91);

  std::stringstream buf;
  m.save(buf);
  const Model back = Model::load(buf);

  CHECK(back.params == m.params);
  CHECK(back.vocab == m.vocab);
  for (const Example& ex : d.examples) {
    const ModelOutput a = m.predict(ex.text);
    const ModelOutput b = back.predict(ex.text);
    CHECK(a.class_probs == b.class_probs);
    CHECK(a.rating == b.rating);
  }

  std::stringstream buf2;
  back.save(buf2);
  CHECK(buf.str() == buf2.str());
}
