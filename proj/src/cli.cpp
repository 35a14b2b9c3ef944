#include "nextvisit/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "nextvisit/checkpoint.hpp"
#include "nextvisit/inference.hpp"
#include "nextvisit/io.hpp"
#include "nextvisit/records.hpp"
#include "nextvisit/report.hpp"
#include "nextvisit/scale.hpp"
#include "nextvisit/synth.hpp"
#include "nextvisit/tasks.hpp"
#include "nextvisit/train.hpp"
#include "nextvisit/vocab.hpp"

namespace nextvisit {

Precision precision_from_env() {
  const char* v = std::getenv("NEXTVISIT_PRECISION");
  if (!v || std::string(v).empty() || std::string(v) == "float") return Precision::Float;
  if (std::string(v) == "double") return Precision::Double;
  throw ConfigError("NEXTVISIT_PRECISION must be 'float' or 'double'");
}

void apply_thread_env() {
  const char* v = std::getenv("NEXTVISIT_THREADS");
  if (!v || !*v) return;
  try {
    const int n = std::stoi(v);
    if (n < 1) throw std::invalid_argument("threads");
    Eigen::setNbThreads(n);
  } catch (const std::logic_error&) {
    throw ConfigError("NEXTVISIT_THREADS must be a positive integer");
  }
}

namespace {

struct Context {
  std::vector<std::string> args;
  RunManifest manifest;

  void start(std::uint64_t seed) {
    manifest.command_line = args;
    manifest.tool_version = std::string(kToolVersion);
    manifest.seed = seed;
    manifest.started_at = utc_timestamp();
  }
  void add_config(const std::string& path) {
    if (!path.empty()) manifest.config_hashes[path] = sha256_file(path);
  }
  void write(const std::string& path, std::string_view contents) {
    manifest.finished_at = utc_timestamp();
    write_artifact(path, contents, manifest);
    spdlog::info("wrote {}", path);
  }
};

std::string join(const std::string& dir, const std::string& name) {
  return dir.empty() || dir.back() == '/' ? dir + name : dir + "/" + name;
}

Vocabulary load_vocab(Context& ctx, const std::string& path) {
  ctx.manifest.add_input(path);
  Vocabulary v = Vocabulary::parse(read_file(path));
  ctx.manifest.extra["vocab_hash"] = v.content_hash();
  return v;
}

std::vector<PatientRecord> load_encoded(Context& ctx, const std::string& path) {
  ctx.manifest.add_input(path);
  return parse_encoded_records(read_file(path));
}

std::vector<PatientTruth> load_truth(Context& ctx, const std::string& path, const std::vector<PatientRecord>& records,
                                     const std::vector<CodeSet>& sets) {
  if (path.empty()) return derive_truth(records, sets);
  ctx.manifest.add_input(path);
  return parse_truth(read_file(path));
}

Checkpoint load_ckpt(Context& ctx, const std::string& path, const Vocabulary& vocab) {
  ctx.manifest.add_input(path);
  Checkpoint c = load_checkpoint(path, vocab.content_hash());
  ctx.manifest.extra["checkpoint_hash"] = sha256_file(path);
  return c;
}

// ---------------------------------------------------------------------------

struct SynthOpts {
  std::string config, out, truth, codesets;
  long n = -1;
  std::uint64_t seed = 1;
};

void run_synth(Context& ctx, const SynthOpts& o) {
  ctx.start(o.seed);
  GeneratorConfig cfg = GeneratorConfig::desk_default();
  if (!o.config.empty()) {
    ctx.add_config(o.config);
    cfg = GeneratorConfig::from_config(KeyValueConfig::load(o.config));
  }
  if (o.n > 0) cfg.n_patients = static_cast<std::size_t>(o.n);
  cfg.seed = o.seed;
  Cohort cohort = generate_cohort(cfg, o.seed);
  const std::string codesets =
      o.codesets.empty() ? (std::filesystem::path(o.out).parent_path() / "codesets.json").string() : o.codesets;
  for (const auto& f : {o.out, o.truth, codesets}) {
    const auto dir = std::filesystem::path(f).parent_path();
    if (!dir.empty()) ensure_directory(dir.string());
  }
  ctx.write(o.out, serialize_raw_records(cohort.records));
  ctx.write(o.truth, serialize_truth(cohort.truth));
  ctx.write(codesets, serialize_codeset_file(cfg.code_sets()));
}

struct VocabOpts {
  std::string records, out, vocab;
  int lab_bins = 10, age_bins = 10, gap_bins = 10;
};

void run_vocab_build(Context& ctx, const VocabOpts& o) {
  ctx.start(0);
  ctx.manifest.add_input(o.records);
  auto raw = load_raw_records(o.records);
  auto bins = fit_corpus_bins(raw, o.lab_bins, o.age_bins, o.gap_bins);
  Vocabulary v = build_vocab(raw, bins);
  ctx.manifest.extra["vocab_hash"] = v.content_hash();
  spdlog::info("vocabulary: {} tokens", v.size());
  ctx.write(o.out, v.serialize());
}

void run_vocab_stats(Context& ctx, const VocabOpts& o) {
  Vocabulary v = load_vocab(ctx, o.vocab);
  nlohmann::ordered_json j;
  j["size"] = v.size();
  j["hash"] = v.content_hash();
  for (auto c : {TokenClass::Pad, TokenClass::Sep, TokenClass::Demographic, TokenClass::AgeBin, TokenClass::Diagnosis,
                 TokenClass::Medication, TokenClass::LabBin, TokenClass::Gap})
    j["classes"][std::string(to_string(c))] = v.ids_of_class(c).size();
  for (const auto& [name, spec] : v.bins())
    j["bins"][name] = {{"requested", spec.requested_bins}, {"effective", spec.effective_bins()},
                       {"degenerate", spec.degenerate()}};
  std::cout << j.dump(2) << "\n";
}

struct EncodeOpts {
  std::string records, vocab, out;
  bool lenient = false;
};

void run_encode(Context& ctx, const EncodeOpts& o) {
  ctx.start(0);
  Vocabulary v = load_vocab(ctx, o.vocab);
  ctx.manifest.add_input(o.records);
  auto raw = load_raw_records(o.records);
  std::vector<PatientRecord> enc;
  enc.reserve(raw.size());
  EncodeStats st;
  for (const auto& r : raw) enc.push_back(encode_record(r, v, !o.lenient, &st));
  if (st.dropped_unknown > 0) spdlog::warn("encode: dropped {} unknown concepts", st.dropped_unknown);
  ctx.write(o.out, serialize_encoded_records(enc));
}

struct SplitOpts {
  std::string records, out_dir, ratios = "0.7,0.15,0.15";
  std::uint64_t seed = 1;
};

void run_split(Context& ctx, const SplitOpts& o) {
  ctx.start(o.seed);
  auto recs = load_encoded(ctx, o.records);
  std::vector<double> ratios;
  for (const auto& f : split_csv_line(o.ratios)) {
    try {
      ratios.push_back(std::stod(f));
    } catch (const std::logic_error&) {
      throw ConfigError("split: bad ratio '" + f + "'");
    }
  }
  auto idx = split_patients(recs.size(), ratios, o.seed);
  ensure_directory(o.out_dir);
  auto emit = [&](const std::vector<std::size_t>& part, const char* name) {
    std::vector<PatientRecord> sub;
    for (auto i : part) sub.push_back(recs[i]);
    ctx.write(join(o.out_dir, name), serialize_encoded_records(sub));
  };
  emit(idx.train, "train.jsonl");
  emit(idx.val, "val.jsonl");
  emit(idx.test, "test.jsonl");
}

struct TrainOpts {
  std::string data, val, vocab, config, objective = "raven", out, log;
  long seed = -1;
};

template <class S>
void train_impl(Context& ctx, const TrainOpts& o) {
  Vocabulary v = load_vocab(ctx, o.vocab);
  KeyValueConfig kv;
  if (!o.config.empty()) {
    ctx.add_config(o.config);
    kv = KeyValueConfig::load(o.config);
  }
  ModelConfig mc = model_config_from(kv);
  mc.vocab_size = static_cast<int>(v.size());
  mc.validate();
  TrainConfig tc = TrainConfig::from_config(kv);
  if (o.seed >= 0) tc.seed = static_cast<std::uint64_t>(o.seed);
  ctx.start(tc.seed);
  const Objective obj = objective_from_string(o.objective);
  auto train_recs = load_encoded(ctx, o.data);
  auto val_recs = load_encoded(ctx, o.val);
  const auto block = static_cast<std::size_t>(mc.block_size);
  TrainData train = make_train_data(train_recs, v, obj, block);
  TrainData val = make_train_data(val_recs, v, obj, block);
  spdlog::info("train: objective {}, {} params, {} train rows, {} val rows", to_string(obj), mc.param_count(),
               train.size(), val.size());
  auto res = fit<S>(mc, init_params<S>(mc, derive_seed(tc.seed, "init")), train, val, tc);
  Checkpoint ck{mc, obj, v.content_hash(), res.params.template cast<float>()};
  ctx.manifest.extra["best_val_loss"] = res.best_val;
  ctx.manifest.extra["steps"] = res.steps;
  ctx.write(o.out, serialize_checkpoint(ck));
  if (!o.log.empty()) ctx.write(o.log, log_to_csv(res.log));
}

struct ScoreOpts {
  std::string checkpoint, vocab, data, truth, codesets, pooling = "sum_logits", out;
  std::vector<std::string> tasks;
  RolloutConfig rollout;
  long max_windows = -1;
};

struct Loaded {
  Vocabulary vocab;
  Checkpoint ckpt;
  std::vector<PatientRecord> records;
  std::vector<CodeSet> sets;
  std::vector<PatientTruth> truth;
};

Loaded load_for_scoring(Context& ctx, const ScoreOpts& o) {
  Loaded l;
  l.vocab = load_vocab(ctx, o.vocab);
  l.ckpt = load_ckpt(ctx, o.checkpoint, l.vocab);
  l.records = load_encoded(ctx, o.data);
  ctx.manifest.add_input(o.codesets);
  l.sets = resolve_codesets(parse_codeset_file(read_file(o.codesets)), l.vocab);
  l.truth = load_truth(ctx, o.truth, l.records, l.sets);
  return l;
}

const CodeSet& find_set(const std::vector<CodeSet>& sets, const std::string& name) {
  for (const auto& s : sets)
    if (s.condition == name) return s;
  throw DataError("no code set for condition '" + name + "'");
}

std::vector<EvalExample> windows_for(const Loaded& l, const TaskSpec& task, long max_windows) {
  CohortStats stats;
  auto ex = build_rolling_windows(l.records, l.truth, task, &stats);
  spdlog::info("task {} H={}: {} windows, {} positive", task.condition, task.horizon_days, stats.total,
               stats.positive);
  if (max_windows >= 0 && ex.size() > static_cast<std::size_t>(max_windows)) ex.resize(static_cast<std::size_t>(max_windows));
  return ex;
}

template <class S>
void infer_impl(Context& ctx, const ScoreOpts& o, bool rollout) {
  ctx.start(o.rollout.seed);
  Loaded l = load_for_scoring(ctx, o);
  const ModelParams<S> p = l.ckpt.params.template cast<S>();
  const ModelConfig& mc = l.ckpt.config;
  std::vector<ScoreRow> rows;
  for (const auto& tf : o.tasks) {
    ctx.add_config(tf);
    const TaskSpec task = TaskSpec::from_config(KeyValueConfig::load(tf));
    const CodeSet& cs = find_set(l.sets, task.condition);
    auto ex = windows_for(l, task, o.max_windows);
    std::vector<double> scores;
    if (rollout) {
      RolloutConfig rc = o.rollout;
      rc.horizon_days = static_cast<double>(task.horizon_days);
      rc.gap_days = static_cast<double>(task.gap_days);
      EgeStats st;
      scores = score_rollout(p, mc, l.ckpt.objective, l.vocab, l.records, ex, cs, rc, &st);
      if (st.malformed > 0) spdlog::warn("rollout: {} malformed gap/event alternations", st.malformed);
      if (st.truncated) spdlog::warn("rollout: token budget exhausted before the horizon");
    } else {
      if (l.ckpt.objective != Objective::Raven) throw ConfigError("infer needs a next-visit checkpoint; use rollout");
      scores = score_horizon(p, mc, l.records, ex, cs, static_cast<double>(task.horizon_days),
                             pooling_from_string(o.pooling));
    }
    auto r = make_score_rows(ex, scores, task, l.truth);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  ctx.write(o.out, scores_to_csv(rows));
}

struct EvalOpts {
  std::vector<std::string> scores;
  std::string out, threshold = "max_f1";
  int bootstrap = 1000;
  double level = 0.95;
  std::uint64_t seed = 0;
};

void run_eval(Context& ctx, const EvalOpts& o) {
  ctx.start(o.seed);
  std::vector<ScoreRow> rows;
  for (const auto& f : o.scores) {
    ctx.manifest.add_input(f);
    auto r = parse_scores_csv(read_file(f));
    rows.insert(rows.end(), r.begin(), r.end());
  }
  EvalOptions eo;
  eo.bootstrap = o.bootstrap;
  eo.level = o.level;
  eo.threshold = threshold_mode_from_string(o.threshold);
  eo.seed = o.seed;
  ctx.write(o.out, metrics_to_csv(evaluate_scores(rows, eo)));
}

struct ScaleOpts {
  std::string sweep, train, val, test, vocab, ledger, out, loss = "val";
};

void run_scale_run(Context& ctx, const ScaleOpts& o) {
  Vocabulary v = load_vocab(ctx, o.vocab);
  ctx.add_config(o.sweep);
  const auto kv = KeyValueConfig::load(o.sweep);
  SweepConfig sc = SweepConfig::from_config(kv, static_cast<int>(v.size()), 256);
  ctx.start(sc.seed);
  auto tr = load_encoded(ctx, o.train);
  auto va = load_encoded(ctx, o.val);
  auto te = load_encoded(ctx, o.test);
  auto rows = run_sweep(sc, SweepData{&tr, &va, &te, &v}, o.out);
  ctx.manifest.finished_at = utc_timestamp();
  atomic_write(manifest_path(o.out), ctx.manifest.to_json(o.out).dump(2) + "\n");
  spdlog::info("ledger {} holds {} cells", o.out, rows.size());
}

void run_scale_fit(Context& ctx, const ScaleOpts& o) {
  ctx.start(0);
  ctx.manifest.add_input(o.ledger);
  if (o.loss != "val" && o.loss != "test") throw ConfigError("--loss must be 'val' or 'test'");
  ctx.write(o.out, fit_curves_csv(read_ledger(o.ledger), o.loss == "test"));
}

struct ReportOpts {
  std::vector<std::string> metrics;
  std::string ledger, out, curves, json;
};

void run_report(Context& ctx, const ReportOpts& o) {
  ctx.start(0);
  std::vector<MetricRow> rows;
  for (const auto& f : o.metrics) {
    if (!file_exists(f)) throw DataError("missing input '" + f + "'");
    ctx.manifest.add_input(f);
    auto r = parse_metrics_csv(read_file(f));
    for (auto& m : r)
      if (m.condition != kMacroAverage) rows.push_back(std::move(m));
  }
  rows = with_macro_average(std::move(rows));
  ctx.write(o.out, metrics_to_csv(rows));
  std::vector<LedgerRow> ledger;
  if (!o.ledger.empty()) {
    if (!file_exists(o.ledger)) throw DataError("missing input '" + o.ledger + "'");
    ctx.manifest.add_input(o.ledger);
    ledger = read_ledger(o.ledger);
    if (!o.curves.empty()) {
      std::string val = fit_curves_csv(ledger, false);
      std::string test = fit_curves_csv(ledger, true);
      std::string merged = "loss," + val.substr(0, val.find('\n') + 1);
      auto tag = [](const std::string& csv, const char* t) {
        std::string out;
        std::size_t pos = csv.find('\n') + 1;
        while (pos < csv.size()) {
          const std::size_t nl = csv.find('\n', pos);
          out += std::string(t) + "," + csv.substr(pos, nl - pos + 1);
          pos = nl + 1;
        }
        return out;
      };
      ctx.write(o.curves, merged + tag(val, "val") + tag(test, "test"));
    }
  }
  if (!o.json.empty()) {
    nlohmann::ordered_json j;
    j["metrics"] = nlohmann::json::array();
    for (const auto& m : rows) {
      auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
      j["metrics"].push_back({{"condition", m.condition}, {"horizon_days", m.horizon_days}, {"n", m.n},
                              {"positives", m.positives}, {"auroc", num(m.auroc)}, {"auroc_lo", num(m.auroc_lo)},
                              {"auroc_hi", num(m.auroc_hi)}, {"auprc", num(m.auprc)}, {"auprc_lo", num(m.auprc_lo)},
                              {"auprc_hi", num(m.auprc_hi)}, {"threshold", num(m.threshold)},
                              {"precision", num(m.precision)}, {"recall", num(m.recall)}, {"f1", num(m.f1)},
                              {"on_time_ratio", num(m.on_time_ratio)}});
    }
    j["scaling"] = nlohmann::json::array();
    for (const auto& r : ledger)
      j["scaling"].push_back({{"config_hash", r.config_hash}, {"budget", r.budget}, {"params", r.params},
                              {"best_val_loss", r.best_val_loss}, {"test_loss", r.test_loss}, {"status", r.status}});
    ctx.write(o.json, j.dump(2) + "\n");
  }
}

void add_rollout_flags(CLI::App* c, RolloutConfig& r) {
  c->add_option("--rollouts", r.rollouts, "Trajectories per window")->capture_default_str();
  c->add_option("--step-days", r.step_days, "Simulated visit spacing")->capture_default_str();
  c->add_option("--max-tokens", r.max_tokens, "Token budget per gap/event rollout")->capture_default_str();
  c->add_option("--temperature", r.temperature)->capture_default_str();
  c->add_option("--top-k", r.top_k)->capture_default_str();
  c->add_option("--max-visit-events", r.max_visit_events)->capture_default_str();
  c->add_flag("--bernoulli-visits", r.bernoulli_visits, "Per-token Bernoulli draws for each simulated visit");
  c->add_option("--seed", r.seed)->capture_default_str();
}

void add_scoring_flags(CLI::App* c, ScoreOpts& s) {
  c->add_option("--checkpoint", s.checkpoint)->required()->check(CLI::ExistingFile);
  c->add_option("--vocab", s.vocab)->required()->check(CLI::ExistingFile);
  c->add_option("--data", s.data, "Encoded records to score")->required()->check(CLI::ExistingFile);
  c->add_option("--codesets", s.codesets)->required()->check(CLI::ExistingFile);
  c->add_option("--truth", s.truth, "Ground truth (derived from the records when omitted)")->check(CLI::ExistingFile);
  c->add_option("--task", s.tasks, "Task file(s)")->required()->check(CLI::ExistingFile);
  c->add_option("--max-windows", s.max_windows, "Score at most this many windows per task");
  c->add_option("--out", s.out, "Scores CSV")->required();
}

}  // namespace

int dispatch(const std::vector<std::string>& args) {
  static bool logger_ready = false;
  if (!logger_ready) {
    spdlog::set_default_logger(spdlog::stderr_color_mt("nextvisit"));
    logger_ready = true;
  }
  if (const char* lvl = std::getenv("NEXTVISIT_LOG")) spdlog::set_level(spdlog::level::from_str(lvl));

  CLI::App app{"Next-visit event prediction on longitudinal records"};
  app.require_subcommand(1);
  Context ctx;
  ctx.args = args;

  SynthOpts synth;
  auto* c_synth = app.add_subcommand("synth", "Generate a synthetic cohort");
  c_synth->add_option("--config", synth.config, "Generator config")->check(CLI::ExistingFile);
  c_synth->add_option("--n", synth.n, "Number of patients");
  c_synth->add_option("--seed", synth.seed)->capture_default_str();
  c_synth->add_option("--out", synth.out, "Records file (JSONL)")->required();
  c_synth->add_option("--truth", synth.truth, "Ground-truth file (JSONL)")->required();
  c_synth->add_option("--codesets", synth.codesets, "Code-set file (default: codesets.json beside --out)");

  VocabOpts voc;
  auto* c_vocab = app.add_subcommand("vocab", "Vocabulary tools");
  c_vocab->require_subcommand(1);
  auto* c_vbuild = c_vocab->add_subcommand("build", "Fit bins and build the vocabulary");
  c_vbuild->add_option("--records", voc.records, "Raw records (JSONL)")->required()->check(CLI::ExistingFile);
  c_vbuild->add_option("--out", voc.out)->required();
  c_vbuild->add_option("--lab-bins", voc.lab_bins)->capture_default_str();
  c_vbuild->add_option("--age-bins", voc.age_bins)->capture_default_str();
  c_vbuild->add_option("--gap-bins", voc.gap_bins)->capture_default_str();
  auto* c_vstats = c_vocab->add_subcommand("stats", "Print vocabulary statistics");
  c_vstats->add_option("--vocab", voc.vocab)->required()->check(CLI::ExistingFile);

  EncodeOpts enc;
  auto* c_encode = app.add_subcommand("encode", "Map raw records to token ids");
  c_encode->add_option("--records", enc.records)->required()->check(CLI::ExistingFile);
  c_encode->add_option("--vocab", enc.vocab)->required()->check(CLI::ExistingFile);
  c_encode->add_option("--out", enc.out)->required();
  c_encode->add_flag("--lenient", enc.lenient, "Drop unknown concepts instead of failing");

  SplitOpts spl;
  auto* c_split = app.add_subcommand("split", "Patient-level train/val/test split");
  c_split->add_option("--records", spl.records, "Encoded records")->required()->check(CLI::ExistingFile);
  c_split->add_option("--ratios", spl.ratios)->capture_default_str();
  c_split->add_option("--seed", spl.seed)->capture_default_str();
  c_split->add_option("--out", spl.out_dir, "Output directory")->required();

  TrainOpts tr;
  auto* c_train = app.add_subcommand("train", "Train a model");
  c_train->add_option("--data", tr.data, "Encoded training records")->required()->check(CLI::ExistingFile);
  c_train->add_option("--val", tr.val, "Encoded validation records")->required()->check(CLI::ExistingFile);
  c_train->add_option("--vocab", tr.vocab)->required()->check(CLI::ExistingFile);
  c_train->add_option("--config", tr.config, "Model and training config")->check(CLI::ExistingFile);
  c_train->add_option("--objective", tr.objective, "raven | multiclass | seqloss | ege")->capture_default_str();
  c_train->add_option("--seed", tr.seed);
  c_train->add_option("--out", tr.out, "Checkpoint path")->required();
  c_train->add_option("--log", tr.log, "Training log CSV");

  ScoreOpts inf;
  auto* c_infer = app.add_subcommand("infer", "Single-pass horizon scores");
  add_scoring_flags(c_infer, inf);
  c_infer->add_option("--pooling", inf.pooling, "sum_logits | noisy_or")->capture_default_str();

  ScoreOpts rol;
  auto* c_rollout = app.add_subcommand("rollout", "Monte Carlo rollout scores from a next-token baseline");
  add_scoring_flags(c_rollout, rol);
  add_rollout_flags(c_rollout, rol.rollout);

  EvalOpts ev;
  auto* c_eval = app.add_subcommand("eval", "Metrics with bootstrap intervals");
  c_eval->add_option("--scores", ev.scores)->required()->check(CLI::ExistingFile);
  c_eval->add_option("--out", ev.out)->required();
  c_eval->add_option("--bootstrap", ev.bootstrap)->capture_default_str();
  c_eval->add_option("--level", ev.level)->capture_default_str();
  c_eval->add_option("--threshold", ev.threshold, "max_f1 | prevalence")->capture_default_str();
  c_eval->add_option("--seed", ev.seed)->capture_default_str();

  ScaleOpts sc;
  auto* c_scale = app.add_subcommand("scale", "Model-size by data-budget sweeps");
  c_scale->require_subcommand(1);
  auto* c_srun = c_scale->add_subcommand("run", "Train every missing sweep cell");
  c_srun->add_option("--sweep", sc.sweep)->required()->check(CLI::ExistingFile);
  c_srun->add_option("--train", sc.train)->required()->check(CLI::ExistingFile);
  c_srun->add_option("--val", sc.val)->required()->check(CLI::ExistingFile);
  c_srun->add_option("--test", sc.test)->required()->check(CLI::ExistingFile);
  c_srun->add_option("--vocab", sc.vocab)->required()->check(CLI::ExistingFile);
  c_srun->add_option("--out", sc.out, "Ledger CSV (appended)")->required();
  auto* c_sfit = c_scale->add_subcommand("fit", "Fit loss curves per budget");
  c_sfit->add_option("--ledger", sc.ledger)->required()->check(CLI::ExistingFile);
  c_sfit->add_option("--out", sc.out)->required();
  c_sfit->add_option("--loss", sc.loss, "val | test")->capture_default_str();

  ReportOpts rep;
  auto* c_report = app.add_subcommand("report", "Consolidated metric and scaling tables");
  c_report->add_option("--metrics", rep.metrics, "Metric CSVs from eval")->required();
  c_report->add_option("--ledger", rep.ledger, "Sweep ledger");
  c_report->add_option("--curves", rep.curves, "Scaling curve CSV output");
  c_report->add_option("--json", rep.json, "JSON output");
  c_report->add_option("--out", rep.out)->required();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ExitCode::Usage);
  }

  try {
    apply_thread_env();
    const bool dbl = precision_from_env() == Precision::Double;
    if (c_synth->parsed()) run_synth(ctx, synth);
    else if (c_vbuild->parsed()) run_vocab_build(ctx, voc);
    else if (c_vstats->parsed()) run_vocab_stats(ctx, voc);
    else if (c_encode->parsed()) run_encode(ctx, enc);
    else if (c_split->parsed()) run_split(ctx, spl);
    else if (c_train->parsed()) dbl ? train_impl<double>(ctx, tr) : train_impl<float>(ctx, tr);
    else if (c_infer->parsed()) dbl ? infer_impl<double>(ctx, inf, false) : infer_impl<float>(ctx, inf, false);
    else if (c_rollout->parsed()) dbl ? infer_impl<double>(ctx, rol, true) : infer_impl<float>(ctx, rol, true);
    else if (c_eval->parsed()) run_eval(ctx, ev);
    else if (c_srun->parsed()) run_scale_run(ctx, sc);
    else if (c_sfit->parsed()) run_scale_fit(ctx, sc);
    else if (c_report->parsed()) run_report(ctx, rep);
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return static_cast<int>(ExitCode::Data);
  }
  return 0;
}

int dispatch(int argc, char** argv) { return dispatch(std::vector<std::string>(argv, argv + argc)); }

}  // namespace nextvisit
