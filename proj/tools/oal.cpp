// oal: command-line driver for corpus generation, experiment runs, ablations
// and comparison reports.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "oal/config.hpp"
#include "oal/harness.hpp"
#include "oal/manifest.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace oal;

namespace {

enum Exit { kOk = 0, kConfig = 2, kData = 3, kRuntime = 4 };

struct UsageError : ConfigError {
  using ConfigError::ConfigError;
};

void report_error(const char* kind, const std::string& message) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << '\n';
}

fs::path resolve_out(const fs::path& out) {
  if (out.is_absolute()) return out;
  if (const char* root = std::getenv("OAL_OUTPUT_ROOT"); root && *root) return fs::path(root) / out;
  return out;
}

void prepare_dir(const fs::path& dir, bool force, std::initializer_list<const char*> outputs) {
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) throw UsageError(dir.string() + " exists and is not a directory");
    bool occupied = fs::exists(dir / "manifest.json");
    for (const char* f : outputs) occupied = occupied || fs::exists(dir / f);
    if (occupied && !force)
      throw UsageError(dir.string() + " already holds outputs; pass --force to overwrite");
  }
  fs::create_directories(dir);
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw CorpusError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Experiment flags. Each one maps onto a config key, so a flag always has a
// file equivalent; precedence is flags > config file > defaults.

struct ExperimentFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> policy;
  std::optional<std::string> corpus;
  std::optional<std::string> corpus_format;
  std::optional<std::size_t> batch_size, init_batches, train_batches, test_batches;
  std::optional<double> alpha;
  std::optional<bool> baseline;
  std::optional<std::string> classifier_update;
  std::optional<double> correct_reward, incorrect_reward, query_reward;
  std::optional<std::size_t> t_max, n_queries;
  std::vector<std::string> ablate;
  bool serial = false;
  bool benchmark = false;

  void attach(CLI::App* app) {
    app->add_option("-c,--config", config_path, "JSON config file");
    app->add_flag("--benchmark", benchmark,
                  "start from the desk-scale benchmark preset instead of plain defaults");
    app->add_option("--seed", seed, "master seed (master_seed)");
    app->add_option("--policy", policy, "learned | static (policy)")
        ->check(CLI::IsMember({"learned", "static"}));
    app->add_option("--corpus", corpus, "corpus file (corpus.path); synthetic when absent");
    app->add_option("--corpus-format", corpus_format, "annotation-json | tabular (corpus.format)");
    app->add_option("--batch-size", batch_size, "episodes per batch (batch_size)");
    app->add_option("--init-batches", init_batches, "phases.init");
    app->add_option("--train-batches", train_batches, "phases.train");
    app->add_option("--test-batches", test_batches, "phases.test");
    app->add_option("--alpha", alpha, "policy_params.alpha");
    app->add_option("--baseline", baseline, "policy_params.baseline (true/false)");
    app->add_option("--classifier-update", classifier_update, "batch-end | immediate");
    app->add_option("--reward-correct", correct_reward, "reward.correct_guess");
    app->add_option("--reward-incorrect", incorrect_reward, "reward.incorrect_guess");
    app->add_option("--reward-query", query_reward, "reward.per_query");
    app->add_option("--t-max", t_max, "t_max");
    app->add_option("--static-queries", n_queries, "static_policy.n_queries");
    app->add_option("--ablate", ablate, "feature or group names to zero (ablate)");
    app->add_flag("--serial", serial, "run the serial reference path (parallel: false)");
  }

  json overrides() const {
    json j = json::object();
    if (seed) j["master_seed"] = *seed;
    if (policy) j["policy"] = *policy;
    if (corpus) j["corpus"]["path"] = *corpus;
    if (corpus_format) j["corpus"]["format"] = *corpus_format;
    if (batch_size) j["batch_size"] = *batch_size;
    if (init_batches) j["phases"]["init"] = *init_batches;
    if (train_batches) j["phases"]["train"] = *train_batches;
    if (test_batches) j["phases"]["test"] = *test_batches;
    if (alpha) j["policy_params"]["alpha"] = *alpha;
    if (baseline) j["policy_params"]["baseline"] = *baseline;
    if (classifier_update) j["classifier_update"] = *classifier_update;
    if (correct_reward) j["reward"]["correct_guess"] = *correct_reward;
    if (incorrect_reward) j["reward"]["incorrect_guess"] = *incorrect_reward;
    if (query_reward) j["reward"]["per_query"] = *query_reward;
    if (t_max) j["t_max"] = *t_max;
    if (n_queries) j["static_policy"]["n_queries"] = *n_queries;
    if (!ablate.empty()) j["ablate"] = ablate;
    if (serial) j["parallel"] = false;
    return j;
  }

  ExperimentConfig resolve() const {
    ExperimentConfig c;
    if (benchmark) c = benchmark_config(seed.value_or(c.master_seed));
    if (!config_path.empty()) c = load_config(config_path, c);
    return config_from_json(overrides(), c);
  }
};

struct LoadedCorpus {
  Corpus corpus;
  std::string fingerprint;
};

LoadedCorpus read_corpus(const ExperimentConfig& config) {
  LoadedCorpus out;
  if (config.corpus.path) {
    out.fingerprint = sha256_file(*config.corpus.path);
    out.corpus = load_corpus(config.corpus);
  } else {
    auto regions = generate_synthetic(config.corpus.synthetic).regions;
    out.fingerprint = corpus_fingerprint(regions);
    out.corpus = Corpus(std::move(regions));
  }
  return out;
}

// ---------------------------------------------------------------------------

struct GenDataArgs {
  SyntheticConfig synthetic;
  std::string out;
  std::string format = "annotation-json";
  bool force = false;
};

int cmd_gen_data(const GenDataArgs& a) {
  const auto format = parse_corpus_format(a.format);
  const fs::path dir = resolve_out(a.out);
  const char* file = format == CorpusFormat::Tabular ? "corpus.csv" : "corpus.jsonl";
  const auto generated = generate_synthetic(a.synthetic);
  prepare_dir(dir, a.force, {file});

  std::ostringstream text;
  write_regions(text, generated.regions, format);
  write_file(dir / file, text.str());

  RunManifest m;
  m.command = "gen-data";
  m.version = kVersion;
  m.master_seed = a.synthetic.seed;
  m.corpus_fingerprint = sha256_hex(text.str());
  m.created = utc_timestamp();
  m.outputs = {{"corpus", file}};
  const auto& s = a.synthetic;
  m.config = {{"n_regions", s.n_regions},
              {"dimension", s.dimension},
              {"n_predicates", s.n_predicates},
              {"max_frequency", s.profile.max_frequency},
              {"min_frequency", s.profile.min_frequency},
              {"description_min", s.description_min},
              {"description_max", s.description_max},
              {"seed", s.seed},
              {"format", a.format},
              {"predicates", generated.predicate_names}};
  write_manifest(m, dir);
  std::cout << "wrote " << generated.regions.size() << " regions to " << (dir / file).string()
            << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------

struct RunArgs {
  ExperimentFlags flags;
  std::string out;
  bool force = false;
  bool checkpoints = false;
  std::string resume;
  bool transcripts = false;
  std::size_t stop_after = 0;
};

int cmd_run(const RunArgs& a) {
  const ExperimentConfig config = a.flags.resolve();
  const fs::path dir = resolve_out(a.out);
  prepare_dir(dir, a.force || !a.resume.empty(), {"metrics.csv", "summary.json"});

  const auto loaded = read_corpus(config);
  const World world = make_world(loaded.corpus, config);

  Experiment exp = a.resume.empty() ? Experiment(world, config)
                                    : load_checkpoint(world, config, a.resume);
  std::ofstream transcripts;
  if (a.transcripts) {
    transcripts.open(dir / "transcripts.jsonl", a.resume.empty() ? std::ios::trunc : std::ios::app);
    if (!transcripts) throw Error("cannot write transcripts in " + dir.string());
    exp.on_batch = [&](const BatchResult& b) { write_transcripts(transcripts, b); };
  }
  if (a.checkpoints) fs::create_directories(dir / "checkpoints");

  std::size_t ran = 0;
  while (!exp.done()) {
    const auto& m = exp.step();
    ++ran;
    std::fprintf(stderr, "%-5s batch %2zu  success %.2f  length %5.2f\n", to_string(m.phase),
                 m.batch, m.success_rate, m.mean_length);
    if (a.checkpoints) {
      char name[64];
      std::snprintf(name, sizeof name, "%s-%02zu.json", to_string(m.phase), m.batch);
      save_checkpoint(exp, dir / "checkpoints" / name);
    }
    if (a.stop_after && ran >= a.stop_after) break;
  }

  std::ostringstream csv;
  write_metrics_csv(csv, exp.history());
  write_file(dir / "metrics.csv", csv.str());
  write_file(dir / "summary.json", run_summary(config, exp.history()).dump(2) + "\n");

  RunManifest m;
  m.command = "run";
  m.version = kVersion;
  m.master_seed = config.master_seed;
  m.corpus_fingerprint = loaded.fingerprint;
  m.created = utc_timestamp();
  m.config = config_to_json(config);
  m.outputs = {{"metrics", "metrics.csv"}, {"summary", "summary.json"}};
  if (a.checkpoints) m.outputs["checkpoints"] = "checkpoints";
  if (a.transcripts) m.outputs["transcripts"] = "transcripts.jsonl";
  if (!a.resume.empty()) m.outputs["resumed_from"] = a.resume;
  write_manifest(m, dir);
  return kOk;
}

// ---------------------------------------------------------------------------

struct AblateArgs {
  ExperimentFlags flags;
  std::string out;
  bool force = false;
  std::vector<std::string> conditions;
};

int cmd_ablate(const AblateArgs& a) {
  ExperimentConfig config = a.flags.resolve();
  std::vector<AblationCondition> conditions;
  for (const auto& c : a.conditions) {
    (void)resolve_features(std::vector<std::string>{c});
    conditions.push_back({"-" + c, {c}});
  }
  if (conditions.empty()) conditions = {{"-guess", {"guess"}}, {"-query", {"query"}}};

  const fs::path dir = resolve_out(a.out);
  prepare_dir(dir, a.force, {"ablation.json", "ablation.csv"});
  const auto loaded = read_corpus(config);
  const World world = make_world(loaded.corpus, config);
  const auto result = run_ablation(world, config, conditions);

  std::ostringstream csv;
  csv << "condition,success_rate,mean_length,p_success_vs_static,p_length_vs_static,"
         "p_success_vs_full,p_length_vs_full\n";
  for (std::size_t i = 0; i < result.names.size(); ++i) {
    const auto& last = result.histories[i].back();
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s,%.4f,%.4f", result.names[i].c_str(), last.success_rate,
                  last.mean_length);
    csv << buf;
    auto p = [&](const std::vector<Comparison>& v, std::size_t idx) {
      if (idx >= v.size()) {
        csv << ",,";
        return;
      }
      std::snprintf(buf, sizeof buf, ",%.6g,%.6g", v[idx].success.p_two_sided,
                    v[idx].length.p_two_sided);
      csv << buf;
    };
    p(result.versus_static, i);
    p(result.versus_full, i == 0 ? result.versus_full.size() : i - 1);
    csv << '\n';
  }
  write_file(dir / "ablation.csv", csv.str());
  write_file(dir / "ablation.json", ablation_to_json(result).dump(2) + "\n");
  std::cout << csv.str();

  RunManifest m;
  m.command = "ablate";
  m.version = kVersion;
  m.master_seed = config.master_seed;
  m.corpus_fingerprint = loaded.fingerprint;
  m.created = utc_timestamp();
  m.config = config_to_json(config);
  m.outputs = {{"table", "ablation.csv"}, {"details", "ablation.json"}};
  write_manifest(m, dir);
  return kOk;
}

// ---------------------------------------------------------------------------

struct ReportArgs {
  std::vector<std::string> runs;
  std::string baseline;
  std::string csv_out;
};

struct RunView {
  std::string name;
  RunManifest manifest;
  BatchMetrics last;
};

const char* marker(double p) { return p < 0.01 ? "**" : p < 0.05 ? "*" : ""; }

int cmd_report(const ReportArgs& a) {
  std::vector<RunView> runs;
  for (const auto& r : a.runs) {
    const fs::path dir(r);
    RunView v;
    v.name = dir.filename().empty() ? dir.parent_path().filename().string()
                                    : dir.filename().string();
    v.manifest = read_manifest(dir);
    const json summary = read_json(dir / "summary.json");
    if (!summary.contains("final_batch")) throw CorpusError(r + ": summary has no batches");
    v.last = metrics_from_json(summary.at("final_batch"));
    runs.push_back(std::move(v));
  }
  for (const auto& v : runs)
    if (v.manifest.corpus_fingerprint != runs.front().manifest.corpus_fingerprint)
      throw CorpusError("corpus fingerprints differ between " + runs.front().name + " and " +
                        v.name + "; comparisons must share data");

  // One table per master seed; nothing is averaged across seeds.
  std::map<std::uint64_t, std::vector<const RunView*>> by_seed;
  for (const auto& v : runs) by_seed[v.manifest.master_seed].push_back(&v);

  std::ostringstream csv;
  csv << "master_seed,condition,success_rate,mean_length,p_success,p_length,baseline\n";
  for (const auto& [seed, group] : by_seed) {
    const RunView* base = nullptr;
    for (const auto* v : group)
      if (!a.baseline.empty() ? v->name == a.baseline
                              : v->manifest.config.value("policy", "") == "static")
        base = v;
    if (!base) {
      if (!a.baseline.empty())
        throw UsageError("baseline run '" + a.baseline + "' not found for seed " +
                         std::to_string(seed));
      base = group.front();
    }
    std::printf("master seed %llu (baseline: %s)\n", static_cast<unsigned long long>(seed),
                base->name.c_str());
    std::printf("  %-24s %14s %22s\n", "condition", "success rate", "average dialog length");
    for (const auto* v : group) {
      const auto c = compare_batches(v->name, v->last, base->name, base->last);
      const bool is_base = v == base;
      std::printf("  %-24s %12.2f%-2s %20.2f%-2s\n", v->name.c_str(), v->last.success_rate,
                  is_base ? "" : marker(c.success.p_two_sided), v->last.mean_length,
                  is_base ? "" : marker(c.length.p_two_sided));
      char buf[256];
      if (is_base)
        std::snprintf(buf, sizeof buf, "%llu,%s,%.4f,%.4f,,,%s\n",
                      static_cast<unsigned long long>(seed), v->name.c_str(),
                      v->last.success_rate, v->last.mean_length, base->name.c_str());
      else
        std::snprintf(buf, sizeof buf, "%llu,%s,%.4f,%.4f,%.6g,%.6g,%s\n",
                      static_cast<unsigned long long>(seed), v->name.c_str(),
                      v->last.success_rate, v->last.mean_length, c.success.p_two_sided,
                      c.length.p_two_sided, base->name.c_str());
      csv << buf;
    }
  }
  std::printf("* p < 0.05, ** p < 0.01 (Welch t-test against the baseline, final test batch)\n");
  if (!a.csv_out.empty()) write_file(resolve_out(a.csv_out), csv.str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Opportunistic active learning experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  GenDataArgs gen;
  auto* g = app.add_subcommand("gen-data", "write a synthetic half-space corpus");
  g->add_option("--n-regions", gen.synthetic.n_regions);
  g->add_option("--d", gen.synthetic.dimension, "feature dimension");
  g->add_option("--n-predicates", gen.synthetic.n_predicates);
  g->add_option("--max-frequency", gen.synthetic.profile.max_frequency);
  g->add_option("--min-frequency", gen.synthetic.profile.min_frequency);
  g->add_option("--description-min", gen.synthetic.description_min);
  g->add_option("--description-max", gen.synthetic.description_max);
  g->add_option("--seed", gen.synthetic.seed);
  g->add_option("--format", gen.format, "annotation-json | tabular");
  g->add_option("-o,--out", gen.out, "output directory")->required();
  g->add_flag("--force", gen.force, "overwrite existing outputs");

  RunArgs run;
  auto* r = app.add_subcommand("run", "run the three-phase experiment");
  run.flags.attach(r);
  r->add_option("-o,--out", run.out, "run directory")->required();
  r->add_flag("--force", run.force, "overwrite existing outputs");
  r->add_flag("--checkpoints", run.checkpoints, "checkpoint after every batch");
  r->add_option("--resume", run.resume, "continue from a checkpoint file");
  r->add_flag("--transcripts", run.transcripts, "log every episode with beam features");
  r->add_option("--stop-after", run.stop_after, "stop after this many batches");

  AblateArgs abl;
  auto* ab = app.add_subcommand("ablate", "full policy vs masked feature groups vs static");
  abl.flags.attach(ab);
  ab->add_option("-o,--out", abl.out, "output directory")->required();
  ab->add_flag("--force", abl.force, "overwrite existing outputs");
  ab->add_option("--condition", abl.conditions,
                 "feature or group to ablate, one run each (default: guess, query)");

  ReportArgs rep;
  auto* rp = app.add_subcommand("report", "compare finished runs on their final test batch");
  rp->add_option("runs", rep.runs, "run directories")->required();
  rp->add_option("--baseline", rep.baseline, "baseline run directory name");
  rp->add_option("--csv", rep.csv_out, "also write the table as CSV");

  auto* reg = app.add_subcommand("registry", "print the feature registry as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*g) return cmd_gen_data(gen);
    if (*r) return cmd_run(run);
    if (*ab) return cmd_ablate(abl);
    if (*rp) return cmd_report(rep);
    if (*reg) {
      std::cout << registry_csv();
      return kOk;
    }
  } catch (const ConfigError& e) {
    report_error("config", e.what());
    return kConfig;
  } catch (const CorpusError& e) {
    report_error("data", e.what());
    return kData;
  } catch (const ParseError& e) {
    report_error("data", e.what());
    return kData;
  } catch (const CheckpointError& e) {
    report_error("data", e.what());
    return kData;
  } catch (const std::exception& e) {
    report_error("runtime", e.what());
    return kRuntime;
  }
  return kOk;
}
