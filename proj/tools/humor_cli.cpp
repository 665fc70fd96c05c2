// Command-line front end: synthetic data generation, training with strategy
// flags, strategy comparisons, the gradient self-check, and the
// cross-validation / pseudo-labeling / ensembling pipeline.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "humor/gradcheck_driver.hpp"
#include "humor/run_io.hpp"
#include "humor/strategies.hpp"
#include "humor/trainer.hpp"

namespace {

// Exit codes, also documented in the README.
constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kDataError = 3;
constexpr int kDivergence = 4;
constexpr int kGradCheckFailure = 5;

std::vector<std::uint64_t> parse_seeds(const std::string& csv) {
  std::vector<std::uint64_t> out;
  std::string cur;
  for (char c : csv + ",") {
    if (c == ',') {
      if (!cur.empty()) out.push_back(std::stoull(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (out.empty()) throw humor::IoError("no seeds given");
  return out;
}

humor::StrategyFlags parse_flags(const std::string& csv) {
  humor::StrategyFlags f;
  std::string cur;
  for (char c : csv + ",") {
    if (c != ',') {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
      continue;
    }
    if (cur.empty()) continue;
    if (cur == "at") f.at = true;
    else if (cur == "lc") f.lc = true;
    else if (cur == "mt") f.mt = true;
    else if (cur == "wl") f.wl = true;
    else if (cur != "none") throw humor::IoError("unknown strategy flag: " + cur);
    cur.clear();
  }
  return f;
}

struct TrainCliArgs {
  std::string config_path, train_path, dev_path, out_dir;
  std::string flags_csv;
  double eps = -1.0, alpha = -1.0, w = -1.0, lr = -1.0;
  std::int64_t seed = -1;
  int epochs = -1;

  humor::TrainConfig resolve() const {
    humor::TrainConfig cfg;
    if (!config_path.empty()) cfg = humor::load_config_file(config_path);
    if (!flags_csv.empty()) cfg.flags = parse_flags(flags_csv);
    if (eps >= 0.0) cfg.eps = eps;
    if (alpha >= 0.0) cfg.alpha = alpha;
    if (w >= 0.0) cfg.w = w;
    if (lr > 0.0) cfg.lr = lr;
    if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
    if (epochs > 0) cfg.epochs = epochs;
    cfg.validate();
    return cfg;
  }
};

void add_config_options(CLI::App* cmd, TrainCliArgs& args) {
  cmd->add_option("--config", args.config_path, "JSON config file (flat key/value)");
  cmd->add_option("--flags", args.flags_csv, "strategy flags, comma separated: at,lc,mt,wl");
  cmd->add_option("--eps", args.eps, "perturbation norm budget");
  cmd->add_option("--alpha", args.alpha, "adversarial term weight");
  cmd->add_option("--w", args.w, "label-correction weight");
  cmd->add_option("--lr", args.lr, "learning rate");
  cmd->add_option("--seed", args.seed, "run seed");
  cmd->add_option("--epochs", args.epochs, "training epochs");
}

int run_synth(int count, std::uint64_t seed, double noise, const std::string& out,
              bool unlabeled) {
  humor::Dataset data = humor::synth_generate(count, seed, noise);
  if (unlabeled) data = humor::strip_labels(std::move(data));
  humor::save_csv(data, out);
  std::printf("wrote %zu rows to %s\n", data.size(), out.c_str());
  return kOk;
}

int run_train(const TrainCliArgs& args) {
  const humor::TrainConfig cfg = args.resolve();
  const humor::Dataset train_set = humor::load_csv(args.train_path, humor::Split::kTrain);
  humor::Dataset dev_set;
  if (!args.dev_path.empty()) dev_set = humor::load_csv(args.dev_path, humor::Split::kDev);
  std::printf("train rows: %zu, dev rows: %zu\n", train_set.size(), dev_set.size());

  const humor::TrainResult result = humor::train(cfg, train_set, dev_set);
  humor::write_run_dir(args.out_dir, cfg, result);

  const humor::Metrics& m = result.fold.validation;
  if (m.rmse)
    std::printf("final: acc %.4f f1 %.4f rmse %.4f\n", m.accuracy, m.f1, *m.rmse);
  else
    std::printf("final: acc %.4f f1 %.4f rmse -\n", m.accuracy, m.f1);
  std::printf("run directory: %s\n", args.out_dir.c_str());
  return kOk;
}

int run_compare(const TrainCliArgs& args, const std::string& seeds_csv,
                const std::string& out_dir) {
  const humor::TrainConfig cfg = args.resolve();
  const std::vector<std::uint64_t> seeds = parse_seeds(seeds_csv);
  const humor::Dataset train_set = humor::load_csv(args.train_path, humor::Split::kTrain);
  const humor::Dataset dev_set = humor::load_csv(args.dev_path, humor::Split::kDev);

  const auto cls = humor::run_strategies(cfg, humor::classification_strategies(), train_set,
                                         dev_set, seeds);
  const auto mtl = humor::run_strategies(cfg, humor::multitask_strategies(), train_set,
                                         dev_set, seeds);

  const std::string table_a = humor::render_comparison(humor::rows_of(cls));
  const std::string table_b = humor::render_comparison(humor::rows_of(mtl));
  std::printf("classification strategies\n%s\n", table_a.c_str());
  std::printf("task weighting strategies\n%s", table_b.c_str());

  if (!out_dir.empty()) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    std::ofstream txt(fs::path(out_dir) / "comparison.txt", std::ios::binary);
    txt << "classification strategies\n" << table_a << "\ntask weighting strategies\n" << table_b;
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& o : cls) rows.push_back(humor::strategy_rows_to_json({&o.row, 1})[0]);
    for (const auto& o : mtl) rows.push_back(humor::strategy_rows_to_json({&o.row, 1})[0]);
    std::ofstream js(fs::path(out_dir) / "comparison.json", std::ios::binary);
    js << rows.dump(2) << "\n";
  }
  return kOk;
}

int run_gradcheck(bool corrupt) {
  const humor::GradCheckSummary summary = humor::run_full_gradcheck(1e-5, 1e-4, corrupt);
  for (const humor::GradCheckCombo& c : summary.combos) {
    std::printf("flags[at=%d lc=%d mt=%d wl=%d] worst %.3e (%s)\n", c.flags.at, c.flags.lc,
                c.flags.mt, c.flags.wl, c.report.max_rel_err, c.report.worst_param.c_str());
  }
  std::printf("per-parameter worst relative error:\n");
  for (const auto& [name, err] : summary.per_param)
    std::printf("  %-12s %.3e\n", name.c_str(), err);
  std::printf("overall worst %.3e (%s), %.2fs\n", summary.worst, summary.worst_param.c_str(),
              summary.seconds);
  if (!summary.passed) {
    std::printf("gradcheck FAILED (tolerance 1e-4)\n");
    return kGradCheckFailure;
  }
  std::printf("gradcheck passed\n");
  return kOk;
}

int run_pipeline(const TrainCliArgs& args, const std::string& unlabeled_path, int k,
                 const std::string& seeds_csv, double lo, double hi,
                 const std::string& out_dir) {
  const humor::TrainConfig cfg = args.resolve();
  const std::vector<std::uint64_t> seeds = parse_seeds(seeds_csv);
  const humor::Dataset train_set = humor::load_csv(args.train_path, humor::Split::kTrain);
  const humor::Dataset unlabeled = humor::load_csv(unlabeled_path, humor::Split::kTest);

  const humor::PipelineResult result =
      humor::full_pipeline(cfg, train_set, unlabeled, k, seeds, lo, hi);

  const humor::PipelineReport& r = result.report;
  std::printf("stage 1: %zu models over %d folds x %zu seeds\n", r.stage1_models, k,
              seeds.size());
  std::printf("pseudo-labels selected: %zu of %zu (p > %g or p < %g)\n", r.pseudo_count,
              r.unlabeled_count, hi, lo);
  std::printf("stage 2: %zu models, kept %zu\n", r.stage2_models, r.selected_models);
  if (r.final_metrics.rmse)
    std::printf("final (held-out, confidence weighted): acc %.4f f1 %.4f rmse %.4f\n",
                r.final_metrics.accuracy, r.final_metrics.f1, *r.final_metrics.rmse);
  else
    std::printf("final (held-out, confidence weighted): acc %.4f f1 %.4f rmse -\n",
                r.final_metrics.accuracy, r.final_metrics.f1);

  if (!out_dir.empty()) humor::write_pipeline_report(out_dir, r);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-task humor classification and rating trainer"};
  app.require_subcommand(1);

  // synth
  int synth_count = 0;
  std::int64_t synth_seed = 1;
  double synth_noise = 0.0;
  std::string synth_out;
  bool synth_unlabeled = false;
  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic CSV dataset");
  synth->add_option("count", synth_count, "number of rows")->required();
  synth->add_option("--seed", synth_seed, "generator seed");
  synth->add_option("--noise", synth_noise, "label flip rate in [0,1]");
  synth->add_option("--out", synth_out, "output CSV path")->required();
  synth->add_flag("--unlabeled", synth_unlabeled, "drop labels (test-set style)");

  // train
  TrainCliArgs train_args;
  CLI::App* train_cmd = app.add_subcommand("train", "train one model");
  train_cmd->add_option("--train", train_args.train_path, "training CSV")->required();
  train_cmd->add_option("--dev", train_args.dev_path, "dev CSV");
  train_cmd->add_option("--out", train_args.out_dir, "run directory")->required();
  add_config_options(train_cmd, train_args);

  // compare-strategies
  TrainCliArgs cmp_args;
  std::string cmp_seeds = "1,2,3";
  std::string cmp_out;
  CLI::App* cmp = app.add_subcommand("compare-strategies",
                                     "train every strategy over seeds and tabulate");
  cmp->add_option("--train", cmp_args.train_path, "training CSV")->required();
  cmp->add_option("--dev", cmp_args.dev_path, "dev CSV")->required();
  cmp->add_option("--seeds", cmp_seeds, "comma-separated seed list");
  cmp->add_option("--out", cmp_out, "output directory");
  add_config_options(cmp, cmp_args);

  // gradcheck
  bool corrupt = false;
  CLI::App* gc = app.add_subcommand("gradcheck",
                                    "finite-difference check of the full objective");
  gc->add_flag("--corrupt", corrupt,
               "test hook: skew one gradient rule; the check must fail");

  // pipeline
  TrainCliArgs pipe_args;
  std::string pipe_unlabeled, pipe_seeds = "1,2,3,4", pipe_out;
  int pipe_k = 5;
  double pipe_lo = 0.05, pipe_hi = 0.95;
  CLI::App* pipe = app.add_subcommand(
      "pipeline", "cross-validate, pseudo-label, retrain and ensemble");
  pipe->add_option("--train", pipe_args.train_path, "training CSV")->required();
  pipe->add_option("--unlabeled", pipe_unlabeled, "unlabeled CSV")->required();
  pipe->add_option("--k", pipe_k, "fold count");
  pipe->add_option("--seeds", pipe_seeds, "comma-separated seed list");
  pipe->add_option("--lo", pipe_lo, "lower selection threshold");
  pipe->add_option("--hi", pipe_hi, "upper selection threshold");
  pipe->add_option("--out", pipe_out, "output directory");
  add_config_options(pipe, pipe_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  try {
    if (*synth)
      return run_synth(synth_count, static_cast<std::uint64_t>(synth_seed), synth_noise,
                       synth_out, synth_unlabeled);
    if (*train_cmd) return run_train(train_args);
    if (*cmp) return run_compare(cmp_args, cmp_seeds, cmp_out);
    if (*gc) return run_gradcheck(corrupt);
    if (*pipe)
      return run_pipeline(pipe_args, pipe_unlabeled, pipe_k, pipe_seeds, pipe_lo, pipe_hi,
                          pipe_out);
  } catch (const humor::TrainingDiverged& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kDivergence;
  } catch (const humor::NonFiniteError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return kDivergence;
  } catch (const humor::IoError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigError;
  } catch (const humor::LossError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigError;
  } catch (const humor::DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kDataError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kDataError;
  }
  return kOk;
}
