#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "humor/corpus.hpp"
#include "humor/param_store.hpp"
#include "humor/rng.hpp"
#include "humor/tape.hpp"
#include "humor/tensor.hpp"

namespace humor {

struct ModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EmbeddingConfig {
  int vocab_size = 2;
  int max_len = 32;
  int emb_dim = 32;
  int hidden_dim = 32;  // per direction

  void validate() const {
    if (vocab_size < 1 || max_len < 1 || emb_dim < 1 || hidden_dim < 1)
      throw ModelError("embedding config fields must be >= 1");
  }
};

// Additive term applied at the embedding sum, with its norm budget.
// An empty tensor is the zero perturbation.
struct Perturbation {
  Tensor beta;
  double eps = 0.0;

  static Perturbation zero() { return {}; }
  bool is_zero() const { return beta.v.empty(); }

  void validate() const {
    if (eps < 0.0) throw ModelError("perturbation: eps must be >= 0");
    if (!is_zero() && beta.l2norm() > eps + 1e-9)
      throw ModelError("perturbation exceeds its norm budget");
  }
};

// Value-level per-example output. rating is the raw head output;
// inference_rating() applies the [0,5] clamp used everywhere predictions
// are reported.
struct ModelOutput {
  std::array<double, 2> class_probs{0.5, 0.5};
  double rating = 0.0;
  std::vector<double> pooled;

  double inference_rating() const { return std::clamp(rating, 0.0, 5.0); }
  int predicted_class() const { return class_probs[1] >= 0.5 ? 1 : 0; }
};

// ---- parameters ----

struct GruVars {
  Var wz, uz, bz, wr, ur, br, wh, uh, bh;
};

struct BoundParams {
  Var tok_emb, pos_emb, seg_emb;
  GruVars enc1_f, enc1_b, enc2_f, enc2_b;
  Var cls_w, cls_b, reg_w, reg_b;
  Var s1, s2;
};

namespace detail {

inline void add_gru_params(ParamStore& ps, const std::string& prefix, int in_dim,
                           int hidden, Rng& rng) {
  auto glorot = [&](int rows, int cols) {
    Tensor t(mat_shape(rows, cols));
    const double r = std::sqrt(6.0 / (rows + cols));
    for (auto& x : t.v) x = rng.uniform(-r, r);
    return t;
  };
  for (const char* gate : {"z", "r", "h"}) {
    ps.add(prefix + "_w" + gate, glorot(hidden, in_dim));
    ps.add(prefix + "_u" + gate, glorot(hidden, hidden));
    ps.add(prefix + "_b" + gate, Tensor(vec_shape(hidden)));
  }
}

inline GruVars bind_gru(Tape& t, const ParamStore& ps, const std::string& prefix) {
  GruVars g;
  g.wz = t.param(ps, prefix + "_wz");
  g.uz = t.param(ps, prefix + "_uz");
  g.bz = t.param(ps, prefix + "_bz");
  g.wr = t.param(ps, prefix + "_wr");
  g.ur = t.param(ps, prefix + "_ur");
  g.br = t.param(ps, prefix + "_br");
  g.wh = t.param(ps, prefix + "_wh");
  g.uh = t.param(ps, prefix + "_uh");
  g.bh = t.param(ps, prefix + "_bh");
  return g;
}

}  // namespace detail

inline ParamStore init_params(const EmbeddingConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  ParamStore ps;

  auto table = [&](int rows, int cols) {
    Tensor t(mat_shape(rows, cols));
    for (auto& x : t.v) x = rng.uniform(-0.1, 0.1);
    return t;
  };
  ps.add("emb_tok", table(cfg.vocab_size, cfg.emb_dim));
  ps.add("emb_pos", table(cfg.max_len, cfg.emb_dim));
  ps.add("emb_seg", table(1, cfg.emb_dim));

  const int h = cfg.hidden_dim;
  detail::add_gru_params(ps, "enc1_f", cfg.emb_dim, h, rng);
  detail::add_gru_params(ps, "enc1_b", cfg.emb_dim, h, rng);
  detail::add_gru_params(ps, "enc2_f", 2 * h + 2, h, rng);
  detail::add_gru_params(ps, "enc2_b", 2 * h + 2, h, rng);

  auto glorot = [&](int rows, int cols) {
    Tensor t(mat_shape(rows, cols));
    const double r = std::sqrt(6.0 / (rows + cols));
    for (auto& x : t.v) x = rng.uniform(-r, r);
    return t;
  };
  ps.add("cls_w", glorot(2, 2 * h));
  ps.add("cls_b", Tensor(vec_shape(2)));
  ps.add("reg_w", glorot(1, 2 * h));
  ps.add("reg_b", Tensor(vec_shape(1)));
  ps.add("unc_s1", Tensor::scalar(0.0));
  ps.add("unc_s2", Tensor::scalar(0.0));
  return ps;
}

inline BoundParams bind_params(Tape& t, const ParamStore& ps) {
  BoundParams b;
  b.tok_emb = t.param(ps, "emb_tok");
  b.pos_emb = t.param(ps, "emb_pos");
  b.seg_emb = t.param(ps, "emb_seg");
  b.enc1_f = detail::bind_gru(t, ps, "enc1_f");
  b.enc1_b = detail::bind_gru(t, ps, "enc1_b");
  b.enc2_f = detail::bind_gru(t, ps, "enc2_f");
  b.enc2_b = detail::bind_gru(t, ps, "enc2_b");
  b.cls_w = t.param(ps, "cls_w");
  b.cls_b = t.param(ps, "cls_b");
  b.reg_w = t.param(ps, "reg_w");
  b.reg_b = t.param(ps, "reg_b");
  b.s1 = t.param(ps, "unc_s1");
  b.s2 = t.param(ps, "unc_s2");
  return b;
}

// ---- graph builders ----

// Per-example tape handles. `embedded` is the perturbation injection point;
// its gradient after a backward pass is the input to the perturbation
// construction.
struct ExampleGraph {
  Var embedded;             // (n x d)
  std::vector<Var> hidden;  // n states of width 2h
  Var pooled;               // (2h)
  Var probs;                // (2)
  Var rating;               // (1), raw
  int n = 0;
};

// Token, position and segment embedding rows summed per position, plus the
// perturbation when one is given.
inline Var embed(Tape& t, const BoundParams& p, const TokenSeq& seq, const Tensor* beta) {
  if (seq.n < 1) throw ModelError("embed: empty sequence");
  const std::vector<int> ids(seq.ids.begin(), seq.ids.begin() + seq.n);
  std::vector<int> positions(static_cast<std::size_t>(seq.n));
  for (int i = 0; i < seq.n; ++i) positions[static_cast<std::size_t>(i)] = i;
  const std::vector<int> seg(seq.segments.begin(), seq.segments.begin() + seq.n);

  Var sum = t.add(t.add(t.rows(p.tok_emb, ids), t.rows(p.pos_emb, positions)),
                  t.rows(p.seg_emb, seg));
  if (beta != nullptr && !beta->v.empty()) {
    if (!(beta->shape == t.shape(sum)))
      throw ModelError("perturbation shape does not match the embedding output");
    sum = t.add(sum, t.constant(*beta));
  }
  return sum;
}

namespace detail {

inline std::vector<Var> run_gru(Tape& t, const GruVars& g, const std::vector<Var>& xs,
                                int hidden_dim) {
  Var h = t.constant(Tensor(vec_shape(hidden_dim)));
  std::vector<Var> states;
  states.reserve(xs.size());
  for (Var x : xs) {
    Var z = t.sigmoid(t.add(t.add(t.matmul(g.wz, x), t.matmul(g.uz, h)), g.bz));
    Var r = t.sigmoid(t.add(t.add(t.matmul(g.wr, x), t.matmul(g.ur, h)), g.br));
    Var cand = t.tanh(t.add(t.add(t.matmul(g.wh, x), t.matmul(g.uh, t.mul(r, h))), g.bh));
    h = t.add(t.mul(t.affine(z, -1.0, 1.0), h), t.mul(z, cand));
    states.push_back(h);
  }
  return states;
}

}  // namespace detail

// Bidirectional pass over positions 0..n-1 (padding excluded by
// construction). Returns per-position states and writes the pooled state
// (final forward ++ final backward) out.
inline std::vector<Var> encode_states(Tape& t, const GruVars& fwd, const GruVars& bwd,
                                      Var embedded, int n, int hidden_dim, Var* pooled) {
  if (n < 1) throw ModelError("encode: empty sequence");
  std::vector<Var> xs(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) xs[static_cast<std::size_t>(i)] = t.row(embedded, i);

  const std::vector<Var> f = detail::run_gru(t, fwd, xs, hidden_dim);
  std::vector<Var> rev(xs.rbegin(), xs.rend());
  const std::vector<Var> b_rev = detail::run_gru(t, bwd, rev, hidden_dim);

  std::vector<Var> states(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    states[static_cast<std::size_t>(i)] =
        t.concat(f[static_cast<std::size_t>(i)], b_rev[static_cast<std::size_t>(n - 1 - i)]);
  if (pooled != nullptr)
    *pooled = t.concat(f[static_cast<std::size_t>(n - 1)], b_rev[static_cast<std::size_t>(n - 1)]);
  return states;
}

inline Var classify(Tape& t, const BoundParams& p, Var pooled) {
  return t.softmax(t.add(t.matmul(p.cls_w, pooled), p.cls_b));
}

// Every encoder state is concatenated with the broadcast class
// probabilities and fed to the second bidirectional layer; a linear unit on
// its pooled state yields the raw rating.
inline Var rate(Tape& t, const BoundParams& p, const std::vector<Var>& hidden, Var probs,
                int hidden_dim) {
  std::vector<Var> xs;
  xs.reserve(hidden.size());
  for (Var hs : hidden) xs.push_back(t.concat(hs, probs));

  const std::vector<Var> f = detail::run_gru(t, p.enc2_f, xs, hidden_dim);
  std::vector<Var> rev(xs.rbegin(), xs.rend());
  const std::vector<Var> b_rev = detail::run_gru(t, p.enc2_b, rev, hidden_dim);
  Var pooled2 = t.concat(f.back(), b_rev.back());
  return t.add(t.matmul(p.reg_w, pooled2), p.reg_b);
}

inline ExampleGraph forward_example(Tape& t, const BoundParams& p, const EmbeddingConfig& cfg,
                                    const TokenSeq& seq, const Tensor* beta = nullptr) {
  ExampleGraph g;
  g.n = seq.n;
  g.embedded = embed(t, p, seq, beta);
  g.hidden = encode_states(t, p.enc1_f, p.enc1_b, g.embedded, seq.n, cfg.hidden_dim, &g.pooled);
  g.probs = classify(t, p, g.pooled);
  g.rating = rate(t, p, g.hidden, g.probs, cfg.hidden_dim);
  return g;
}

// ---- model bundle ----

// Everything needed to reload and reproduce outputs bit-exactly.
struct Model {
  EmbeddingConfig config;
  Vocab vocab;
  ParamStore params;

  ModelOutput predict_seq(const TokenSeq& seq) const {
    Tape t;
    const BoundParams bp = bind_params(t, params);
    const ExampleGraph g = forward_example(t, bp, config, seq);
    ModelOutput out;
    out.class_probs = {t.val(g.probs)[0], t.val(g.probs)[1]};
    out.rating = t.val(g.rating)[0];
    const auto pooled = t.val(g.pooled);
    out.pooled.assign(pooled.begin(), pooled.end());
    return out;
  }

  ModelOutput predict(const std::string& raw_text) const {
    return predict_seq(encode(raw_text, vocab, config.max_len));
  }

  void save(std::ostream& os) const {
    const std::uint32_t magic = 0x484D4B31;  // "HMK1"
    os.write(reinterpret_cast<const char*>(&magic), sizeof(magic));
    const std::int32_t dims[4] = {config.vocab_size, config.max_len, config.emb_dim,
                                  config.hidden_dim};
    os.write(reinterpret_cast<const char*>(dims), sizeof(dims));
    const std::uint32_t ntok = static_cast<std::uint32_t>(vocab.size());
    os.write(reinterpret_cast<const char*>(&ntok), sizeof(ntok));
    for (int i = 0; i < vocab.size(); ++i) {
      const std::string& tok = vocab.token(i);
      const std::uint32_t len = static_cast<std::uint32_t>(tok.size());
      os.write(reinterpret_cast<const char*>(&len), sizeof(len));
      os.write(tok.data(), static_cast<std::streamsize>(tok.size()));
    }
    params.save(os);
    if (!os) throw ModelError("model write failed");
  }

  void save_file(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ModelError("cannot write checkpoint: " + path);
    save(out);
  }

  static Model load(std::istream& is) {
    std::uint32_t magic = 0;
    is.read(reinterpret_cast<char*>(&magic), sizeof(magic));
    if (!is || magic != 0x484D4B31) throw ModelError("bad checkpoint header");
    std::int32_t dims[4] = {0, 0, 0, 0};
    is.read(reinterpret_cast<char*>(dims), sizeof(dims));
    Model m;
    m.config = {dims[0], dims[1], dims[2], dims[3]};
    std::uint32_t ntok = 0;
    is.read(reinterpret_cast<char*>(&ntok), sizeof(ntok));
    for (std::uint32_t i = 0; i < ntok; ++i) {
      std::uint32_t len = 0;
      is.read(reinterpret_cast<char*>(&len), sizeof(len));
      std::string tok(len, '\0');
      is.read(tok.data(), static_cast<std::streamsize>(len));
      if (i >= 2) m.vocab.add(tok);  // PAD/UNK are implicit
    }
    if (!is) throw ModelError("checkpoint read failed");
    m.params = ParamStore::load(is);
    return m;
  }

  static Model load_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ModelError("cannot open checkpoint: " + path);
    return load(in);
  }
};

}  // namespace humor
