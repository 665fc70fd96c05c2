#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "humor/metrics.hpp"
#include "humor/trainer.hpp"

namespace humor {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---- config <-> json ----

inline nlohmann::json config_to_json(const TrainConfig& c) {
  return nlohmann::json{
      {"emb_dim", c.emb_dim},
      {"hidden_dim", c.hidden_dim},
      {"max_len", c.max_len},
      {"min_freq", c.min_freq},
      {"lr", c.lr},
      {"epochs", c.epochs},
      {"batch_size", c.batch_size},
      {"seed", c.seed},
      {"warmup_proportion", c.warmup_proportion},
      {"flags",
       {{"at", c.flags.at}, {"lc", c.flags.lc}, {"mt", c.flags.mt}, {"wl", c.flags.wl}}},
      {"eps", c.eps},
      {"alpha", c.alpha},
      {"w", c.w},
      {"w_warmup_epochs", c.w_warmup_epochs},
  };
}

// Unknown keys are rejected so config typos fail loudly.
inline TrainConfig config_from_json(const nlohmann::json& j) {
  static const std::vector<std::string> known{
      "emb_dim",  "hidden_dim", "max_len", "min_freq",        "lr",
      "epochs",   "batch_size", "seed",    "warmup_proportion", "flags",
      "eps",      "alpha",      "w",       "w_warmup_epochs"};
  for (const auto& [key, _] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw IoError("unknown config key: " + key);

  TrainConfig c;
  c.emb_dim = j.value("emb_dim", c.emb_dim);
  c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
  c.max_len = j.value("max_len", c.max_len);
  c.min_freq = j.value("min_freq", c.min_freq);
  c.lr = j.value("lr", c.lr);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.seed = j.value("seed", c.seed);
  c.warmup_proportion = j.value("warmup_proportion", c.warmup_proportion);
  if (j.contains("flags")) {
    const auto& f = j.at("flags");
    c.flags.at = f.value("at", false);
    c.flags.lc = f.value("lc", false);
    c.flags.mt = f.value("mt", false);
    c.flags.wl = f.value("wl", false);
  }
  c.eps = j.value("eps", c.eps);
  c.alpha = j.value("alpha", c.alpha);
  c.w = j.value("w", c.w);
  c.w_warmup_epochs = j.value("w_warmup_epochs", c.w_warmup_epochs);
  return c;
}

inline TrainConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("config parse error in " + path + ": " + e.what());
  }
  return config_from_json(j);
}

// ---- run directory ----

inline nlohmann::json metrics_to_json(const Metrics& m) {
  nlohmann::json j{{"accuracy", m.accuracy}, {"f1", m.f1}};
  if (m.rmse) j["rmse"] = *m.rmse;
  else j["rmse"] = nullptr;
  return j;
}

inline nlohmann::json epoch_to_json(const EpochRecord& r) {
  return nlohmann::json{
      {"epoch", r.epoch},      {"l1", r.parts.l1},
      {"l2", r.parts.l2},      {"adv", r.parts.adv},
      {"w", r.parts.w},        {"alpha", r.parts.alpha},
      {"s1", r.parts.s1},      {"s2", r.parts.s2},
      {"total", r.parts.total}, {"metrics", metrics_to_json(r.eval)},
  };
}

inline std::string history_table(const std::vector<EpochRecord>& history) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-6s %-10s %-10s %-10s %-10s %-8s %-8s %-8s\n", "epoch",
                "total", "l1", "l2", "adv", "acc", "f1", "rmse");
  out += line;
  for (const EpochRecord& r : history) {
    char rmse[32];
    if (r.eval.rmse) std::snprintf(rmse, sizeof(rmse), "%.4f", *r.eval.rmse);
    else std::snprintf(rmse, sizeof(rmse), "-");
    std::snprintf(line, sizeof(line), "%-6d %-10.5f %-10.5f %-10.5f %-10.5f %-8.4f %-8.4f %-8s\n",
                  r.epoch, r.parts.total, r.parts.l1, r.parts.l2, r.parts.adv, r.eval.accuracy,
                  r.eval.f1, rmse);
    out += line;
  }
  return out;
}

// config.json, history.jsonl, checkpoint.bin, report.json, report.txt.
// Every byte is derived from (config, result), so identical runs produce
// identical directories.
inline void write_run_dir(const std::string& dir, const TrainConfig& config,
                          const TrainResult& result) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);

  {
    std::ofstream out(fs::path(dir) / "config.json", std::ios::binary);
    out << config_to_json(config).dump(2) << "\n";
    if (!out) throw IoError("cannot write config.json under " + dir);
  }
  {
    std::ofstream out(fs::path(dir) / "history.jsonl", std::ios::binary);
    for (const EpochRecord& r : result.history) out << epoch_to_json(r).dump() << "\n";
    if (!out) throw IoError("cannot write history.jsonl under " + dir);
  }
  result.fold.model.save_file((fs::path(dir) / "checkpoint.bin").string());
  {
    nlohmann::json report{
        {"validation", metrics_to_json(result.fold.validation)},
        {"confidence", result.fold.confidence},
        {"epochs", result.history.size()},
        {"seed", config.seed},
    };
    std::ofstream out(fs::path(dir) / "report.json", std::ios::binary);
    out << report.dump(2) << "\n";
    if (!out) throw IoError("cannot write report.json under " + dir);
  }
  {
    std::ofstream out(fs::path(dir) / "report.txt", std::ios::binary);
    out << history_table(result.history);
    if (!out) throw IoError("cannot write report.txt under " + dir);
  }
}

inline nlohmann::json pipeline_report_to_json(const PipelineReport& r) {
  nlohmann::json fused = nlohmann::json::array();
  for (const auto& [id, p] : r.fused) fused.push_back({{"id", id}, {"p1", p}});
  return nlohmann::json{
      {"train_count", r.train_count},
      {"unlabeled_count", r.unlabeled_count},
      {"pseudo_count", r.pseudo_count},
      {"stage1_models", r.stage1_models},
      {"stage2_models", r.stage2_models},
      {"selected_models", r.selected_models},
      {"lo", r.lo},
      {"hi", r.hi},
      {"fused", fused},
      {"final_metrics", metrics_to_json(r.final_metrics)},
  };
}

inline void write_pipeline_report(const std::string& dir, const PipelineReport& report) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::ofstream out(fs::path(dir) / "pipeline_report.json", std::ios::binary);
  out << pipeline_report_to_json(report).dump(2) << "\n";
  if (!out) throw IoError("cannot write pipeline_report.json under " + dir);
}

inline nlohmann::json strategy_rows_to_json(std::span<const StrategyRow> rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const StrategyRow& r : rows) {
    nlohmann::json j{
        {"strategy", r.name},
        {"seeds", r.seed_count},
        {"mean", metrics_to_json(r.mean)},
        {"spread", metrics_to_json(r.spread)},
    };
    arr.push_back(std::move(j));
  }
  return arr;
}

}  // namespace humor
