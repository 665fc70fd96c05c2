#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "humor/rng.hpp"

namespace humor {

struct DataError : std::runtime_error {
  // line is 1-based within the file; 0 when the error is not row-level.
  int line = 0;
  DataError(const std::string& msg, int line_ = 0)
      : std::runtime_error(line_ > 0 ? msg + " (line " + std::to_string(line_) + ")" : msg),
        line(line_) {}
};

// One text row: binary humor label y1 (absent on unlabeled rows) and a
// humor rating y2 in [0,5] (present only when y1 = 1).
struct Example {
  long long id = 0;
  std::string text;
  std::optional<int> y1;
  std::optional<double> y2;

  bool labeled() const { return y1.has_value(); }
};

enum class Split { kTrain, kDev, kTest, kSynthetic };

struct Dataset {
  std::vector<Example> examples;
  Split split = Split::kTrain;

  std::size_t size() const { return examples.size(); }
};

// Token ids; PAD and UNK are always present at fixed indices.
class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr const char* kPadToken = "<pad>";
  static constexpr const char* kUnkToken = "<unk>";

  Vocab() : tokens_{kPadToken, kUnkToken} {
    index_[kPadToken] = kPad;
    index_[kUnkToken] = kUnk;
  }

  int add(const std::string& token) {
    auto it = index_.find(token);
    if (it != index_.end()) return it->second;
    const int id = static_cast<int>(tokens_.size());
    tokens_.push_back(token);
    index_[token] = id;
    return id;
  }

  int lookup(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? kUnk : it->second;
  }

  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  int size() const { return static_cast<int>(tokens_.size()); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  bool operator==(const Vocab& o) const { return tokens_ == o.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

// Fixed-length encoded sentence. Single-sentence input, so every segment id
// is zero; n is the unpadded token count.
struct TokenSeq {
  std::vector<int> ids;       // length max_len, right-padded with PAD
  std::vector<int> segments;  // length max_len, all zero
  int n = 0;
};

// ---- text cleanup ----

// Extension hooks named after the cleanup steps we do not model; both are
// identity transforms.
inline std::string spell_correct(std::string text) { return text; }
inline std::string stem(std::string text) { return text; }

// Lowercase, strip control characters, collapse whitespace runs, trim.
inline std::string preprocess(const std::string& text) {
  std::string s = stem(spell_correct(text));
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (unsigned char c : s) {
    if (std::isspace(c) || std::iscntrl(c)) {
      if (std::isspace(c) && !out.empty()) pending_space = true;
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

// Whitespace-split with punctuation broken out into its own tokens.
inline std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  };
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      flush();
    } else if (std::isalnum(c) || c == '\'') {
      cur.push_back(static_cast<char>(c));
    } else {
      flush();
      out.emplace_back(1, static_cast<char>(c));
    }
  }
  flush();
  return out;
}

// ---- vocabulary ----

// Every token with corpus frequency >= min_freq, indexed by frequency
// descending then lexicographic, after PAD and UNK.
inline Vocab build_vocab(const Dataset& data, int min_freq) {
  if (min_freq < 1) throw DataError("build_vocab: min_freq must be >= 1");
  std::map<std::string, long long> freq;
  for (const Example& ex : data.examples)
    for (const std::string& tok : tokenize(preprocess(ex.text))) ++freq[tok];

  std::vector<std::pair<std::string, long long>> entries(freq.begin(), freq.end());
  std::stable_sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocab vocab;
  for (const auto& [tok, count] : entries)
    if (count >= min_freq) vocab.add(tok);
  return vocab;
}

inline TokenSeq encode(const std::string& text, const Vocab& vocab, int max_len) {
  if (max_len < 1) throw DataError("encode: max_len must be >= 1");
  TokenSeq seq;
  seq.ids.assign(static_cast<std::size_t>(max_len), Vocab::kPad);
  seq.segments.assign(static_cast<std::size_t>(max_len), 0);
  const std::vector<std::string> toks = tokenize(preprocess(text));
  seq.n = std::min<int>(static_cast<int>(toks.size()), max_len);
  for (int i = 0; i < seq.n; ++i) seq.ids[static_cast<std::size_t>(i)] = vocab.lookup(toks[static_cast<std::size_t>(i)]);
  return seq;
}

// ---- CSV ----

namespace detail {

// RFC 4180 style: quoted fields may contain commas and doubled quotes.
inline std::vector<std::string> split_csv_row(const std::string& line, int lineno) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  if (quoted) throw DataError("unterminated quote", lineno);
  fields.push_back(cur);
  return fields;
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out.push_back('"');
  return out;
}

inline std::string format_double(double x) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, p);
}

inline long long parse_int_field(const std::string& s, const char* what, int lineno) {
  long long v = 0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [p, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || p != last)
    throw DataError(std::string("non-numeric ") + what + " '" + s + "'", lineno);
  return v;
}

inline double parse_double_field(const std::string& s, const char* what, int lineno) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [p, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || p != last)
    throw DataError(std::string("non-numeric ") + what + " '" + s + "'", lineno);
  return v;
}

}  // namespace detail

// Loads the `id,text,is_humor,humor_rating,...` schema. Extra columns are
// parsed and ignored; empty is_humor means an unlabeled row; empty
// humor_rating means y2 absent. Row order is preserved.
inline Dataset load_csv(const std::string& path, Split split = Split::kTrain) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);

  std::string header;
  if (!std::getline(in, header)) throw DataError("empty file: " + path);
  const std::vector<std::string> cols = detail::split_csv_row(header, 1);
  auto col_of = [&](const std::string& name) {
    for (std::size_t i = 0; i < cols.size(); ++i)
      if (cols[i] == name) return static_cast<int>(i);
    return -1;
  };
  const int id_col = col_of("id");
  const int text_col = col_of("text");
  const int humor_col = col_of("is_humor");
  const int rating_col = col_of("humor_rating");
  if (id_col < 0 || text_col < 0 || humor_col < 0 || rating_col < 0)
    throw DataError("header must contain id,text,is_humor,humor_rating: " + path);

  Dataset data;
  data.split = split;
  std::string line;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::vector<std::string> f = detail::split_csv_row(line, lineno);
    if (f.size() < cols.size())
      throw DataError("row has " + std::to_string(f.size()) + " fields, expected " +
                          std::to_string(cols.size()),
                      lineno);
    Example ex;
    ex.id = detail::parse_int_field(f[static_cast<std::size_t>(id_col)], "id", lineno);
    ex.text = f[static_cast<std::size_t>(text_col)];
    const std::string& label = f[static_cast<std::size_t>(humor_col)];
    if (!label.empty()) {
      const long long y1 = detail::parse_int_field(label, "is_humor", lineno);
      if (y1 != 0 && y1 != 1) throw DataError("is_humor must be 0 or 1", lineno);
      ex.y1 = static_cast<int>(y1);
    }
    const std::string& rating = f[static_cast<std::size_t>(rating_col)];
    if (!rating.empty()) {
      const double y2 = detail::parse_double_field(rating, "humor_rating", lineno);
      if (y2 < 0.0 || y2 > 5.0) throw DataError("humor_rating out of [0,5]", lineno);
      if (!ex.y1 || *ex.y1 != 1) throw DataError("humor_rating present on a non-humorous row", lineno);
      ex.y2 = y2;
    }
    data.examples.push_back(std::move(ex));
  }

  std::map<long long, int> seen;
  for (const Example& ex : data.examples)
    if (++seen[ex.id] > 1) throw DataError("duplicate id " + std::to_string(ex.id));
  return data;
}

// Writes the same schema load_csv reads (controversy/offense left empty).
inline void save_csv(const Dataset& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path);
  out << "id,text,is_humor,humor_rating,humor_controversy,offense_rating\n";
  for (const Example& ex : data.examples) {
    out << ex.id << ',' << detail::csv_escape(ex.text) << ',';
    if (ex.y1) out << *ex.y1;
    out << ',';
    if (ex.y2) out << detail::format_double(*ex.y2);
    out << ",,\n";
  }
  if (!out) throw DataError("write failed: " + path);
}

inline Dataset strip_labels(Dataset data) {
  for (Example& ex : data.examples) {
    ex.y1.reset();
    ex.y2.reset();
  }
  data.split = Split::kTest;
  return data;
}

// ---- synthetic data ----

// Template sentences whose token mix tracks a latent funniness score
// f ~ uniform[0,5]: each content slot draws from the joke pool with
// probability f/5, otherwise from the office pool. Two topic tokens from a
// wide pool give the model something memorizable, so label noise actually
// hurts a plain fit. y1 = 1 iff f > 2, y2 = f for humorous rows.
// noise_rate flips y1 (dropping y2 on a 1 -> 0 flip).
inline Dataset synth_generate(int count, std::uint64_t seed, double noise_rate = 0.0) {
  if (count < 1) throw DataError("synth_generate: count must be >= 1");
  if (noise_rate < 0.0 || noise_rate > 1.0)
    throw DataError("synth_generate: noise_rate must be in [0,1]");

  static const std::vector<std::string> kJoke = {
      "haha", "pun", "joke", "gag", "zing", "quip", "jest", "lol", "riff", "wink"};
  static const std::vector<std::string> kOffice = {
      "memo", "audit", "ledger", "queue", "form", "minutes", "agenda", "notice",
      "invoice", "report"};
  static const std::vector<std::string> kFiller = {
      "the", "a", "my", "his", "her", "today", "then", "really", "quite", "again"};
  constexpr int kTopicPool = 300;

  Rng rng(seed);
  Dataset data;
  data.split = Split::kSynthetic;
  data.examples.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    Example ex;
    ex.id = i;
    const double f = rng.uniform(0.0, 5.0);
    const int content = 8 + static_cast<int>(rng.below(5));

    std::vector<std::string> toks;
    toks.push_back(kFiller[rng.below(kFiller.size())]);
    toks.push_back("tp" + std::to_string(rng.below(kTopicPool)));
    for (int s = 0; s < content; ++s) {
      const bool funny = rng.bernoulli(f / 5.0);
      const auto& pool = funny ? kJoke : kOffice;
      toks.push_back(pool[rng.below(pool.size())]);
    }
    toks.push_back("tp" + std::to_string(rng.below(kTopicPool)));
    toks.push_back(kFiller[rng.below(kFiller.size())]);

    std::string text;
    for (std::size_t k = 0; k < toks.size(); ++k) {
      if (k) text.push_back(' ');
      text += toks[k];
    }
    ex.text = std::move(text);

    int y1 = f > 2.0 ? 1 : 0;
    if (y1 == 1) ex.y2 = f;
    // Drawn unconditionally so runs that differ only in noise_rate keep
    // identical texts and latent scores.
    if (rng.bernoulli(noise_rate)) {
      y1 = 1 - y1;
      if (y1 == 0) ex.y2.reset();
    }
    ex.y1 = y1;
    data.examples.push_back(std::move(ex));
  }
  return data;
}

// ---- folds ----

struct Fold {
  Dataset train;
  Dataset held_out;
};

// Shuffle indices with the seeded generator, deal round-robin. Held-out
// parts are disjoint, cover the dataset, and differ in size by at most 1.
inline std::vector<Fold> kfold_split(const Dataset& data, int k, std::uint64_t seed) {
  if (k < 2) throw DataError("kfold_split: k must be >= 2");
  if (static_cast<std::size_t>(k) > data.size())
    throw DataError("kfold_split: k exceeds dataset size");

  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);

  std::vector<int> bucket(data.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos)
    bucket[order[pos]] = static_cast<int>(pos % static_cast<std::size_t>(k));

  std::vector<Fold> folds(static_cast<std::size_t>(k));
  for (auto& f : folds) {
    f.train.split = data.split;
    f.held_out.split = Split::kDev;
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (int b = 0; b < k; ++b) {
      auto& part = (b == bucket[i]) ? folds[static_cast<std::size_t>(b)].held_out
                                    : folds[static_cast<std::size_t>(b)].train;
      part.examples.push_back(data.examples[i]);
    }
  }
  return folds;
}

}  // namespace humor
