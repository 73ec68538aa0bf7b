#include "oal/harness.hpp"

#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <ostream>
#include <set>

#include "oal/kernels.hpp"

namespace oal {

using nlohmann::json;

namespace {

constexpr const char* kCheckpointFormat = "oal-checkpoint";
constexpr int kCheckpointVersion = 2;

// Stream tags under (phase, batch, episode).
enum StreamTag : std::uint64_t { kInteraction = 0x11, kEnvironment = 0x22, kActing = 0x33 };

std::uint64_t episode_seed(std::uint64_t master, Phase phase, std::size_t batch, std::size_t episode,
                           StreamTag tag) {
  return derive_seed(master, {static_cast<std::uint64_t>(phase), batch, episode, tag});
}

Interaction batch_interaction(const World& world, const BatchSpec& spec,
                              const ExperimentConfig& config, std::size_t index) {
  SeedStream stream(episode_seed(config.master_seed, spec.phase, spec.batch, index, kInteraction));
  return sample_interaction(world.corpus, world.split, spec.side, config.sizes, stream);
}

EpisodeOutcome run_episode(const World& world, const AgentState& snapshot,
                           const PolicyParams& params, const FeatureMask& mask,
                           const BatchSpec& spec, const ExperimentConfig& config,
                           std::size_t index, Interaction interaction,
                           std::span<const std::string> registered) {
  const auto master = config.master_seed;
  SeedStream acting(episode_seed(master, spec.phase, spec.batch, index, kActing));
  Episode episode(world.corpus, snapshot, interaction, config.env,
                  episode_seed(master, spec.phase, spec.batch, index, kEnvironment), registered);
  const FeatureContext ctx{episode, world.density, mask.empty() ? nullptr : &mask};
  // One guard against policies that never guess: the turn cap only admits
  // the guess, so this always terminates within t_max + 1 steps.
  while (!episode.terminated()) {
    const auto beam = episode.beam();
    auto feats = featurize_beam(ctx, beam);
    std::size_t chosen = 0;
    if (spec.acting == PolicyKind::Learned) {
      const auto probs = action_probabilities(params.theta, feats);
      chosen = sample_action(probs, acting);
    } else {
      chosen = static_policy_act(episode.turn(), beam, config.static_policy, acting);
    }
    episode.step(beam[chosen], std::move(feats), chosen);
  }

  EpisodeOutcome out;
  out.interaction = std::move(interaction);
  out.transcript = episode.transcript();
  out.returns = episode.returns();
  out.labels = episode.pending_labels();
  out.success = episode.succeeded();
  return out;
}

json weights_json(const std::optional<std::vector<double>>& w) {
  return w ? json(*w) : json(nullptr);
}

}  // namespace

const char* to_string(Phase phase) {
  switch (phase) {
    case Phase::Init:
      return "init";
    case Phase::Train:
      return "train";
    case Phase::Test:
      return "test";
  }
  return "?";
}

Phase parse_phase(const std::string& name) {
  if (name == "init") return Phase::Init;
  if (name == "train") return Phase::Train;
  if (name == "test") return Phase::Test;
  throw ParseError("unknown phase '" + name + "'");
}

Corpus load_corpus(const CorpusSource& source) {
  if (source.path) {
    const auto format = source.format ? *source.format : format_from_path(*source.path);
    return Corpus(load_regions(*source.path, format));
  }
  return Corpus(generate_synthetic(source.synthetic).regions);
}

World make_world(Corpus corpus, const ExperimentConfig& config) {
  World w;
  w.corpus = std::move(corpus);
  w.split = make_splits(w.corpus, config.split);
  w.density = kernels::build_density_index(w.corpus, config.density, config.execution);
  return w;
}

BatchMetrics summarize(Phase phase, std::size_t batch, std::span<const EpisodeOutcome> episodes) {
  BatchMetrics m;
  m.phase = phase;
  m.batch = batch;
  double success = 0.0, length = 0.0, queries = 0.0;
  for (const auto& e : episodes) {
    m.success.push_back(e.success ? 1.0 : 0.0);
    m.lengths.push_back(static_cast<double>(e.length()));
    success += e.success ? 1.0 : 0.0;
    length += static_cast<double>(e.length());
    queries += static_cast<double>(e.queries());
    for (const auto& l : e.labels) ++m.label_counts[l.predicate];
  }
  const double n = episodes.empty() ? 1.0 : static_cast<double>(episodes.size());
  m.success_rate = success / n;
  m.mean_length = length / n;
  m.mean_queries = queries / n;
  return m;
}

BatchResult run_batch(const World& world, const AgentState& snapshot, const PolicyParams& params,
                      const BatchSpec& spec, const ExperimentConfig& config,
                      kernels::Execution exec) {
  const auto mask_indices = resolve_features(config.ablate);
  const FeatureMask mask(mask_indices);
  const std::size_t n = config.batch_size;
  // Every description in the batch is registered into P when the batch
  // starts, so no episode's candidates depend on which episodes ran first.
  std::vector<Interaction> interactions;
  interactions.reserve(n);
  std::set<std::string> registered_set;
  for (std::size_t e = 0; e < n; ++e) {
    interactions.push_back(batch_interaction(world, spec, config, e));
    registered_set.insert(interactions.back().description.begin(),
                          interactions.back().description.end());
  }
  const std::vector<std::string> registered(registered_set.begin(), registered_set.end());
  BatchResult result;
  result.episodes.resize(n);
  std::vector<std::exception_ptr> errors(n);

  if (exec == kernels::Execution::Parallel) {
#pragma omp parallel for schedule(dynamic)
    for (std::size_t e = 0; e < n; ++e) {
      try {
        result.episodes[e] = run_episode(world, snapshot, params, mask, spec, config, e,
                                         std::move(interactions[e]), registered);
      } catch (...) {
        errors[e] = std::current_exception();
      }
    }
  } else {
    for (std::size_t e = 0; e < n; ++e) {
      try {
        result.episodes[e] = run_episode(world, snapshot, params, mask, spec, config, e,
                                         std::move(interactions[e]), registered);
      } catch (...) {
        errors[e] = std::current_exception();
      }
    }
  }
  for (std::size_t e = 0; e < n; ++e) {
    if (!errors[e]) continue;
    try {
      std::rethrow_exception(errors[e]);
    } catch (const std::exception& ex) {
      throw ProtocolError(std::string("batch aborted: ") + to_string(spec.phase) + " batch " +
                          std::to_string(spec.batch) + " episode " + std::to_string(e) + ": " +
                          ex.what());
    }
  }
  result.metrics = summarize(spec.phase, spec.batch, result.episodes);
  return result;
}

void absorb_batch(AgentState& agent, const BatchResult& batch, const World& world,
                  const ExperimentConfig& config, kernels::Execution exec) {
  std::set<std::string> changed;
  for (const auto& e : batch.episodes) {
    for (const auto& p : e.interaction.description) {
      auto [it, inserted] = agent.models.try_emplace(p);
      if (inserted) it->second.predicate = p;
    }
    for (const auto& l : e.labels) {
      auto [it, inserted] = agent.models.try_emplace(l.predicate);
      if (inserted) it->second.predicate = l.predicate;
      if (it->second.add_label(l.region, l.label)) changed.insert(l.predicate);
    }
    agent.stats.record_dialog(e.interaction.description, e.success);
  }
  const std::vector<std::string> names(changed.begin(), changed.end());
  kernels::refresh_models(agent.models, names, world.corpus, config.env.classifier, exec);
}

PolicyParams initial_params(const ExperimentConfig& config) {
  PolicyParams p;
  p.alpha = config.policy_params.alpha;
  p.alpha_decay_updates = config.policy_params.alpha_decay_updates;
  p.use_baseline = config.policy_params.baseline;
  return p;
}

// ---------------------------------------------------------------------------

Experiment::Experiment(const World& world, ExperimentConfig config)
    : world_(&world), config_(std::move(config)), params_(initial_params(config_)) {
  config_.validate();
}

std::size_t Experiment::phase_batches(std::size_t phase_index) const {
  switch (phase_index) {
    case 0:
      return config_.batches.init;
    case 1:
      return config_.batches.train;
    default:
      return config_.batches.test;
  }
}

bool Experiment::done() const { return phase_index_ >= 3; }

Phase Experiment::phase() const { return static_cast<Phase>(std::min<std::size_t>(phase_index_, 2)); }

const BatchMetrics& Experiment::step() {
  if (done()) throw ContractError("experiment already finished");
  const Phase ph = phase();
  // Training and testing both start the agent without classifiers or stats.
  if (batch_ == 0 && ph != Phase::Init) agent_.reset_perception();

  BatchSpec spec;
  spec.phase = ph;
  spec.batch = batch_ + 1;
  spec.side = ph == Phase::Test ? PolicySide::Test : PolicySide::Train;
  spec.acting = ph == Phase::Init ? PolicyKind::Static : config_.policy;

  BatchResult result = run_batch(*world_, agent_, params_, spec, config_, config_.execution);
  if (on_batch) on_batch(result);
  absorb_batch(agent_, result, *world_, config_, config_.execution);

  if (ph != Phase::Test && config_.policy == PolicyKind::Learned) {
    std::vector<Trajectory> trajectories;
    trajectories.reserve(result.episodes.size());
    for (const auto& e : result.episodes) trajectories.push_back({e.transcript, e.returns});
    reinforce_update(params_, trajectories);
  }

  history_.push_back(std::move(result.metrics));
  if (++batch_ >= phase_batches(phase_index_)) {
    batch_ = 0;
    ++phase_index_;
  }
  return history_.back();
}

const std::vector<BatchMetrics>& Experiment::run() {
  while (!done()) step();
  return history_;
}

// ---------------------------------------------------------------------------
// Checkpoints. Seed streams are derived per (phase, batch, episode) from the
// master seed, so the batch cursor is the whole of the random state.

json Experiment::checkpoint() const {
  json j;
  j["format"] = kCheckpointFormat;
  j["version"] = kCheckpointVersion;
  j["config"] = config_to_json(config_);
  j["cursor"] = {{"phase", phase_index_}, {"batch", batch_}};
  j["policy"] = {{"theta", params_.theta},
                 {"baseline", params_.baseline},
                 {"baseline_count", params_.baseline_count},
                 {"updates", params_.updates}};
  json models = json::array();
  for (const auto& [name, m] : agent_.models) {
    json labels = json::array();
    for (const auto& [r, l] : m.labels) labels.push_back({r.value, to_int(l)});
    models.push_back({{"predicate", name},
                      {"labels", labels},
                      {"weights", weights_json(m.weights)},
                      {"f1", m.estimated_f1}});
  }
  j["models"] = models;
  json usage = json::array();
  for (const auto& [p, u] : agent_.stats.usage) usage.push_back({p, u.used, u.succeeded});
  j["stats"] = {{"dialogs", agent_.stats.dialogs}, {"usage", usage}};
  json hist = json::array();
  for (const auto& m : history_) hist.push_back(metrics_to_json(m));
  j["history"] = hist;
  return j;
}

Experiment Experiment::restore(const World& world, const ExperimentConfig& config,
                               const json& j) {
  try {
    if (!j.is_object() || j.value("format", "") != kCheckpointFormat)
      throw CheckpointError("not a checkpoint file");
    const int version = j.at("version").get<int>();
    if (version != kCheckpointVersion)
      throw CheckpointError("checkpoint version " + std::to_string(version) +
                            " is not supported (expected " + std::to_string(kCheckpointVersion) +
                            ")");
    if (j.at("config") != config_to_json(config))
      throw CheckpointError("checkpoint was written under a different configuration");

    Experiment e(world, config);
    e.phase_index_ = j.at("cursor").at("phase").get<std::size_t>();
    e.batch_ = j.at("cursor").at("batch").get<std::size_t>();
    if (e.phase_index_ > 3 || (e.phase_index_ < 3 && e.batch_ >= e.phase_batches(e.phase_index_)))
      throw CheckpointError("checkpoint cursor out of range");

    const auto& pol = j.at("policy");
    e.params_.theta = pol.at("theta").get<std::vector<double>>();
    if (e.params_.theta.size() != kFeatureCount)
      throw CheckpointError("checkpoint theta has " + std::to_string(e.params_.theta.size()) +
                            " entries, expected " + std::to_string(kFeatureCount));
    e.params_.baseline = pol.at("baseline").get<double>();
    e.params_.baseline_count = pol.at("baseline_count").get<std::uint64_t>();
    e.params_.updates = pol.at("updates").get<std::uint64_t>();

    for (const auto& mj : j.at("models")) {
      PredicateModel m;
      m.predicate = mj.at("predicate").get<std::string>();
      for (const auto& lj : mj.at("labels")) {
        const auto id = lj.at(0).get<std::uint32_t>();
        const int v = lj.at(1).get<int>();
        if (id >= world.corpus.size() || (v != 1 && v != -1))
          throw CheckpointError("bad label entry for predicate " + m.predicate);
        m.labels.emplace(RegionId{id}, v > 0 ? Label::Positive : Label::Negative);
      }
      if (!mj.at("weights").is_null()) {
        m.weights = mj.at("weights").get<std::vector<double>>();
        if (m.weights->size() != world.corpus.dimension() + 1)
          throw CheckpointError("weight vector size mismatch for predicate " + m.predicate);
      }
      m.estimated_f1 = mj.at("f1").get<double>();
      e.agent_.models.emplace(m.predicate, std::move(m));
    }
    e.agent_.stats.dialogs = j.at("stats").at("dialogs").get<std::uint64_t>();
    for (const auto& u : j.at("stats").at("usage"))
      e.agent_.stats.usage[u.at(0).get<std::string>()] = {u.at(1).get<std::uint64_t>(),
                                                           u.at(2).get<std::uint64_t>()};
    for (const auto& h : j.at("history")) e.history_.push_back(metrics_from_json(h));
    return e;
  } catch (const json::exception& ex) {
    throw CheckpointError(std::string("corrupt checkpoint: ") + ex.what());
  }
}

void save_checkpoint(const Experiment& experiment, const std::filesystem::path& path) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw Error("cannot write checkpoint " + path.string());
    out << experiment.checkpoint().dump() << '\n';
    if (!out) throw Error("failed writing checkpoint " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

Experiment load_checkpoint(const World& world, const ExperimentConfig& config,
                           const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& ex) {
    throw CheckpointError(path.string() + ": truncated or corrupt checkpoint (" + ex.what() + ")");
  }
  return Experiment::restore(world, config, j);
}

// ---------------------------------------------------------------------------

void write_metrics_csv(std::ostream& out, std::span<const BatchMetrics> history) {
  out << "phase,batch,success_rate,mean_length,mean_queries\n";
  char buf[160];
  for (const auto& m : history) {
    std::snprintf(buf, sizeof buf, "%s,%zu,%.6f,%.6f,%.6f\n", to_string(m.phase), m.batch,
                  m.success_rate, m.mean_length, m.mean_queries);
    out << buf;
  }
}

json metrics_to_json(const BatchMetrics& m) {
  return {{"phase", to_string(m.phase)},
          {"batch", m.batch},
          {"success_rate", m.success_rate},
          {"mean_length", m.mean_length},
          {"mean_queries", m.mean_queries},
          {"label_counts", m.label_counts},
          {"success", m.success},
          {"lengths", m.lengths}};
}

BatchMetrics metrics_from_json(const json& j) {
  BatchMetrics m;
  m.phase = parse_phase(j.at("phase").get<std::string>());
  m.batch = j.at("batch").get<std::size_t>();
  m.success_rate = j.at("success_rate").get<double>();
  m.mean_length = j.at("mean_length").get<double>();
  m.mean_queries = j.at("mean_queries").get<double>();
  m.label_counts = j.at("label_counts").get<std::map<std::string, std::size_t>>();
  m.success = j.at("success").get<std::vector<double>>();
  m.lengths = j.at("lengths").get<std::vector<double>>();
  return m;
}

void write_transcripts(std::ostream& out, const BatchResult& batch) {
  for (std::size_t i = 0; i < batch.episodes.size(); ++i) {
    const auto& e = batch.episodes[i];
    json steps = json::array();
    for (const auto& s : e.transcript) {
      steps.push_back({{"turn", s.turn},
                       {"action", describe(s.action)},
                       {"reward", s.reward},
                       {"chosen", s.chosen},
                       {"beam_features", s.beam_features}});
    }
    json rec = {{"phase", to_string(batch.metrics.phase)},
                {"batch", batch.metrics.batch},
                {"episode", i},
                {"target", e.interaction.target.value},
                {"description", e.interaction.description},
                {"success", e.success},
                {"steps", steps}};
    out << rec.dump() << '\n';
  }
}

namespace {

stats::WelchResult welch_or_certain(std::span<const double> a, std::span<const double> b) {
  try {
    return stats::welch_t_test(a, b);
  } catch (const stats::DegenerateVariance&) {
    stats::WelchResult r;
    r.t = stats::mean(a) > stats::mean(b) ? std::numeric_limits<double>::infinity()
                                          : -std::numeric_limits<double>::infinity();
    r.df = static_cast<double>(a.size() + b.size() - 2);
    r.p_two_sided = 0.0;
    return r;
  }
}

json welch_json(const stats::WelchResult& w) {
  return {{"t", w.t}, {"df", w.df}, {"p", w.p_two_sided}};
}

}  // namespace

Comparison compare_batches(const std::string& condition, const BatchMetrics& a,
                           const std::string& baseline, const BatchMetrics& b) {
  Comparison c;
  c.condition = condition;
  c.baseline = baseline;
  c.condition_success = a.success_rate;
  c.baseline_success = b.success_rate;
  c.condition_length = a.mean_length;
  c.baseline_length = b.mean_length;
  c.success = welch_or_certain(a.success, b.success);
  c.length = welch_or_certain(a.lengths, b.lengths);
  return c;
}

json comparison_to_json(const Comparison& c) {
  return {{"condition", c.condition},
          {"baseline", c.baseline},
          {"success_rate", {c.condition_success, c.baseline_success}},
          {"mean_length", {c.condition_length, c.baseline_length}},
          {"success_test", welch_json(c.success)},
          {"length_test", welch_json(c.length)}};
}

stats::WelchResult versus_chance(const BatchMetrics& metrics, double floor) {
  const std::vector<double> chance(metrics.success.size(), floor);
  return welch_or_certain(metrics.success, chance);
}

json run_summary(const ExperimentConfig& config, std::span<const BatchMetrics> history) {
  json j;
  j["version"] = kVersion;
  j["config"] = config_to_json(config);
  j["batches"] = history.size();
  if (!history.empty()) {
    const auto& last = history.back();
    j["final_batch"] = metrics_to_json(last);
    if (last.success.size() >= 2) j["success_vs_chance"] = welch_json(versus_chance(last));
  }
  return j;
}

// ---------------------------------------------------------------------------

AblationResult run_ablation(const World& world, const ExperimentConfig& config,
                            std::span<const AblationCondition> conditions) {
  for (const auto& c : conditions) (void)resolve_features(c.ablate);

  AblationResult out;
  auto run_one = [&](const std::string& name, PolicyKind kind, std::vector<std::string> ablate) {
    ExperimentConfig c = config;
    c.policy = kind;
    c.ablate = std::move(ablate);
    Experiment e(world, c);
    out.names.push_back(name);
    out.histories.push_back(e.run());
  };
  run_one("full", PolicyKind::Learned, {});
  for (const auto& c : conditions) run_one(c.name, PolicyKind::Learned, c.ablate);
  run_one("static", PolicyKind::Static, {});

  const auto& full = out.histories.front().back();
  const auto& stat = out.histories.back().back();
  for (std::size_t i = 0; i + 1 < out.names.size(); ++i) {
    const auto& last = out.histories[i].back();
    out.versus_static.push_back(compare_batches(out.names[i], last, "static", stat));
    if (i > 0) out.versus_full.push_back(compare_batches(out.names[i], last, "full", full));
  }
  return out;
}

json ablation_to_json(const AblationResult& r) {
  json j;
  j["version"] = kVersion;
  json conds = json::array();
  for (std::size_t i = 0; i < r.names.size(); ++i)
    conds.push_back({{"name", r.names[i]}, {"final_batch", metrics_to_json(r.histories[i].back())}});
  j["conditions"] = conds;
  json vs = json::array(), vf = json::array();
  for (const auto& c : r.versus_static) vs.push_back(comparison_to_json(c));
  for (const auto& c : r.versus_full) vf.push_back(comparison_to_json(c));
  j["versus_static"] = vs;
  j["versus_full"] = vf;
  return j;
}

}  // namespace oal
