#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "oal/harness.hpp"

using namespace oal;

namespace {

ExperimentConfig small_config(std::uint64_t seed = 3) {
  ExperimentConfig c;
  c.master_seed = seed;
  c.corpus.synthetic.n_regions = 240;
  c.corpus.synthetic.dimension = 8;
  c.corpus.synthetic.n_predicates = 8;
  c.corpus.synthetic.seed = seed;
  c.split.frequency_threshold = 40;
  c.split.seed = seed;
  c.batches = {2, 2, 2};
  c.batch_size = 20;
  c.policy_params.alpha = 1e-6;
  c.env.classifier.iterations = 60;
  return c;
}

World world_for(const ExperimentConfig& c) { return make_world(load_corpus(c.corpus), c); }

std::string csv(std::span<const BatchMetrics> h) {
  std::ostringstream out;
  write_metrics_csv(out, h);
  return out.str();
}

}  // namespace

TEST(Phase, Names) {
  for (auto p : {Phase::Init, Phase::Train, Phase::Test}) EXPECT_EQ(parse_phase(to_string(p)), p);
  EXPECT_THROW(parse_phase("warmup"), Error);
}

TEST(Batch, RunsBatchSizeEpisodes) {
  auto c = small_config();
  c.batch_size = 100;
  const auto w = world_for(c);
  const auto r = run_batch(w, AgentState{}, initial_params(c), BatchSpec{}, c, c.execution);
  EXPECT_EQ(r.episodes.size(), 100u);
  EXPECT_EQ(r.metrics.success.size(), 100u);
  for (const auto& e : r.episodes) {
    EXPECT_EQ(e.returns.size(), e.transcript.size());
    EXPECT_EQ(e.length(), e.queries() + 1);
  }
}

TEST(Batch, SerialEqualsParallel) {
  auto c = small_config();
  const auto w = world_for(c);
  for (auto acting : {PolicyKind::Static, PolicyKind::Learned}) {
    BatchSpec spec;
    spec.acting = acting;
    const auto a = run_batch(w, AgentState{}, initial_params(c), spec, c, kernels::Execution::Serial);
    const auto b = run_batch(w, AgentState{}, initial_params(c), spec, c, kernels::Execution::Parallel);
    EXPECT_EQ(a.metrics, b.metrics);
  }
}

TEST(Batch, StaticDialogsAreSixteenTurns) {
  const auto c = small_config();
  const auto w = world_for(c);
  const auto r = run_batch(w, AgentState{}, initial_params(c), BatchSpec{}, c, c.execution);
  for (double l : r.metrics.lengths) EXPECT_EQ(l, 16.0);
}

TEST(Batch, LabelCountsSumToAcquiredLabels) {
  const auto c = small_config();
  const auto w = world_for(c);
  const auto r = run_batch(w, AgentState{}, initial_params(c), BatchSpec{}, c, c.execution);
  std::size_t total = 0, acquired = 0;
  for (const auto& [p, n] : r.metrics.label_counts) total += n;
  for (const auto& e : r.episodes) acquired += e.labels.size();
  EXPECT_EQ(total, acquired);
}

TEST(Experiment, Deterministic) {
  const auto c = small_config();
  const auto w = world_for(c);
  Experiment a(w, c), b(w, c);
  EXPECT_EQ(csv(a.run()), csv(b.run()));
  EXPECT_EQ(a.params().theta, b.params().theta);
}

TEST(Experiment, SerialEqualsParallelEndToEnd) {
  auto c = small_config();
  const auto w = world_for(c);
  c.execution = kernels::Execution::Serial;
  Experiment a(w, c);
  c.execution = kernels::Execution::Parallel;
  Experiment b(w, c);
  EXPECT_EQ(a.run(), b.run());
}

TEST(Experiment, PhasesAndThetaFreezeInTest) {
  const auto c = small_config();
  const auto w = world_for(c);
  Experiment e(w, c);
  std::vector<double> theta_at_test;
  while (!e.done()) {
    if (e.phase() == Phase::Test && theta_at_test.empty()) theta_at_test = e.params().theta;
    e.step();
  }
  EXPECT_EQ(e.params().theta, theta_at_test);
  ASSERT_EQ(e.history().size(), 6u);
  EXPECT_EQ(e.history()[0].phase, Phase::Init);
  EXPECT_EQ(e.history()[3].phase, Phase::Train);
  EXPECT_EQ(e.history()[3].batch, 2u);
  EXPECT_EQ(e.history()[5].phase, Phase::Test);
  EXPECT_THROW(e.step(), ContractError);
}

TEST(Experiment, StaticRunLeavesThetaAtZero) {
  auto c = small_config();
  c.policy = PolicyKind::Static;
  const auto w = world_for(c);
  Experiment e(w, c);
  e.on_batch = [](const BatchResult& r) {
    for (const auto& ep : r.episodes)
      if (ep.length() < 16) EXPECT_EQ(ep.transcript.back().beam_features.size(), 1u);
  };
  e.run();
  for (double v : e.params().theta) EXPECT_EQ(v, 0.0);
  // Later batches on this small corpus can run out of unlabeled pairs, at
  // which point the static policy guesses early.
  for (const auto& m : e.history())
    for (double l : m.lengths) EXPECT_LE(l, 16.0);
}

TEST(Experiment, TestPhaseStartsFromFreshPerception) {
  const auto c = small_config();
  const auto w = world_for(c);
  Experiment e(w, c);
  while (e.phase() != Phase::Test) e.step();
  EXPECT_GT(e.agent().models.size(), 0u);
  const auto theta = e.params();
  const auto from_reset = e.step();
  BatchSpec spec;
  spec.phase = Phase::Test;
  spec.side = PolicySide::Test;
  spec.acting = c.policy;
  const auto fresh = run_batch(w, AgentState{}, theta, spec, c, c.execution);
  EXPECT_EQ(from_reset, fresh.metrics);
}

TEST(Checkpoint, ResumeMatchesUninterrupted) {
  const auto c = small_config();
  const auto w = world_for(c);
  Experiment full(w, c);
  full.run();
  for (std::size_t stop : {1u, 3u, 5u}) {
    Experiment first(w, c);
    for (std::size_t i = 0; i < stop; ++i) first.step();
    const auto text = first.checkpoint().dump();
    auto resumed = Experiment::restore(w, c, nlohmann::json::parse(text));
    resumed.run();
    EXPECT_EQ(csv(resumed.history()), csv(full.history()));
    EXPECT_EQ(resumed.params().theta, full.params().theta);
  }
}

TEST(Checkpoint, FileRoundTripAndCorruption) {
  const auto c = small_config();
  const auto w = world_for(c);
  Experiment e(w, c);
  e.step();
  const auto dir = std::filesystem::temp_directory_path() / "oal_ckpt_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const auto path = dir / "init-01.json";
  save_checkpoint(e, path);
  auto back = load_checkpoint(w, c, path);
  EXPECT_EQ(back.checkpoint(), e.checkpoint());

  std::string text;
  {
    std::ifstream in(path);
    text.assign(std::istreambuf_iterator<char>(in), {});
  }
  std::ofstream(dir / "short.json") << text.substr(0, text.size() / 2);
  EXPECT_THROW(load_checkpoint(w, c, dir / "short.json"), CheckpointError);
  EXPECT_THROW(load_checkpoint(w, c, dir / "missing.json"), CheckpointError);

  auto j = e.checkpoint();
  j["version"] = 99;
  EXPECT_THROW(Experiment::restore(w, c, j), CheckpointError);
  auto other = c;
  other.master_seed = 4;
  EXPECT_THROW(Experiment::restore(w, other, e.checkpoint()), CheckpointError);
  j = e.checkpoint();
  j["cursor"]["phase"] = "x";
  EXPECT_THROW(Experiment::restore(w, c, j), CheckpointError);
  std::filesystem::remove_all(dir);
}

TEST(Metrics, CsvShapeAndJsonRoundTrip) {
  const auto c = small_config();
  const auto w = world_for(c);
  Experiment e(w, c);
  e.run();
  const auto text = csv(e.history());
  EXPECT_EQ(text.substr(0, text.find('\n')), "phase,batch,success_rate,mean_length,mean_queries");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 7);
  for (const auto& m : e.history()) EXPECT_EQ(metrics_from_json(metrics_to_json(m)), m);
  const auto summary = run_summary(c, e.history());
  EXPECT_EQ(summary["version"], kVersion);
  EXPECT_TRUE(summary.contains("success_vs_chance"));
}

TEST(Metrics, TranscriptsCarryBeamFeatures) {
  const auto c = small_config();
  const auto w = world_for(c);
  BatchSpec spec;
  spec.acting = PolicyKind::Learned;
  const auto r = run_batch(w, AgentState{}, initial_params(c), spec, c, c.execution);
  std::ostringstream out;
  write_transcripts(out, r);
  std::istringstream in(out.str());
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    for (const auto& s : j["steps"]) {
      ASSERT_FALSE(s["beam_features"].empty());
      EXPECT_EQ(s["beam_features"][0].size(), kFeatureCount);
    }
    ++n;
  }
  EXPECT_EQ(n, r.episodes.size());
}

TEST(Compare, DegenerateBatchesAreCertain) {
  BatchMetrics a, b;
  a.success.assign(10, 1.0);
  b.success.assign(10, 0.0);
  a.lengths.assign(10, 16.0);
  b.lengths.assign(10, 16.0);
  const auto c = compare_batches("a", a, "b", b);
  EXPECT_TRUE(std::isinf(c.success.t));
  EXPECT_EQ(c.success.p_two_sided, 0.0);
  EXPECT_EQ(c.length.p_two_sided, 1.0);
  EXPECT_NO_THROW(comparison_to_json(c).dump());
}

TEST(Compare, VersusChance) {
  BatchMetrics m;
  for (int i = 0; i < 100; ++i) m.success.push_back(i % 5 < 3);
  const auto r = versus_chance(m);
  EXPECT_GT(r.t, 0.0);
  EXPECT_LT(r.p_two_sided, 0.05);
}

// Masking a group zeroes exactly its indices in every logged vector, and the
// empty mask is a no-op.
TEST(Ablation, MaskingIsExact) {
  auto c = small_config();
  const auto w = world_for(c);
  BatchSpec spec;
  spec.acting = PolicyKind::Learned;
  const auto& reg = feature_registry();
  for (const std::string group : {"guess", "query"}) {
    c.ablate = {group};
    const auto masked = resolve_features(c.ablate);
    const auto r = run_batch(w, AgentState{}, initial_params(c), spec, c, c.execution);
    for (const auto& e : r.episodes)
      for (const auto& s : e.transcript)
        for (const auto& f : s.beam_features)
          for (auto i : masked) EXPECT_EQ(f[i], 0.0) << reg[i].name;
  }
  c.ablate.clear();
  EXPECT_TRUE(resolve_features(c.ablate).empty());
}

TEST(Ablation, RunsAllConditions) {
  auto c = small_config();
  c.batches = {1, 1, 1};
  const auto w = world_for(c);
  const std::vector<AblationCondition> conds{{"no-guess", {"guess"}}, {"no-query", {"query"}}};
  const auto r = run_ablation(w, c, conds);
  EXPECT_EQ(r.names.size(), 4u);
  EXPECT_EQ(r.histories.size(), 4u);
  EXPECT_EQ(r.versus_static.size(), 3u);
  EXPECT_NO_THROW(ablation_to_json(r).dump());
}
