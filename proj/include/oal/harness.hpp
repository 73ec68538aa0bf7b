#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "oal/agent.hpp"
#include "oal/config.hpp"
#include "oal/corpus.hpp"
#include "oal/dialog.hpp"
#include "oal/perception.hpp"
#include "oal/policy.hpp"
#include "oal/stats.hpp"

namespace oal {

inline constexpr const char* kVersion = "0.3.1";

enum class Phase { Init, Train, Test };
const char* to_string(Phase phase);
Phase parse_phase(const std::string& name);

// Corpus, split and density index: fixed for a whole run.
struct World {
  Corpus corpus;
  CorpusSplit split;
  DensityIndex density;
};

Corpus load_corpus(const CorpusSource& source);
World make_world(Corpus corpus, const ExperimentConfig& config);

struct EpisodeOutcome {
  Interaction interaction;
  std::vector<TranscriptStep> transcript;
  std::vector<double> returns;
  std::vector<AcquiredLabel> labels;
  bool success = false;

  std::size_t length() const { return transcript.size(); }
  std::size_t queries() const { return transcript.empty() ? 0 : transcript.size() - 1; }
};

struct BatchMetrics {
  Phase phase = Phase::Init;
  std::size_t batch = 0;  // 1-based within the phase
  double success_rate = 0.0;
  double mean_length = 0.0;
  double mean_queries = 0.0;
  std::map<std::string, std::size_t> label_counts;
  std::vector<double> success;  // per-episode indicators
  std::vector<double> lengths;  // per-episode system turns

  bool operator==(const BatchMetrics&) const = default;
};

struct BatchResult {
  BatchMetrics metrics;
  std::vector<EpisodeOutcome> episodes;
};

struct BatchSpec {
  Phase phase = Phase::Init;
  std::size_t batch = 1;
  PolicySide side = PolicySide::Train;
  PolicyKind acting = PolicyKind::Static;
};

// Runs batch_size episodes against a frozen snapshot. Episodes are
// independent and each one draws from its own seed streams, so the parallel
// and serial paths give identical results.
BatchResult run_batch(const World& world, const AgentState& snapshot, const PolicyParams& params,
                      const BatchSpec& spec, const ExperimentConfig& config,
                      kernels::Execution exec);

// End-of-batch bookkeeping on the agent: merge labels, register description
// predicates, refresh changed classifiers, update usage stats.
void absorb_batch(AgentState& agent, const BatchResult& batch, const World& world,
                  const ExperimentConfig& config, kernels::Execution exec);

BatchMetrics summarize(Phase phase, std::size_t batch, std::span<const EpisodeOutcome> episodes);

struct CheckpointError : Error {
  using Error::Error;
};

// Three-phase protocol as an explicit state machine, so a run can stop at any
// batch boundary, checkpoint, and resume.
class Experiment {
 public:
  Experiment(const World& world, ExperimentConfig config);

  bool done() const;
  Phase phase() const;
  std::size_t batch_in_phase() const { return batch_ + 1; }

  // Runs the next batch and applies all end-of-batch updates.
  const BatchMetrics& step();
  const std::vector<BatchMetrics>& run();

  const std::vector<BatchMetrics>& history() const { return history_; }
  const AgentState& agent() const { return agent_; }
  AgentState& agent() { return agent_; }
  const PolicyParams& params() const { return params_; }
  PolicyParams& params() { return params_; }
  const ExperimentConfig& config() const { return config_; }

  // Called with every finished batch before the agent absorbs it.
  std::function<void(const BatchResult&)> on_batch;

  nlohmann::json checkpoint() const;
  // Throws CheckpointError on version or config mismatch and bad content.
  static Experiment restore(const World& world, const ExperimentConfig& config,
                            const nlohmann::json& checkpoint);

 private:
  std::size_t phase_batches(std::size_t phase_index) const;

  const World* world_;
  ExperimentConfig config_;
  AgentState agent_;
  PolicyParams params_;
  std::size_t phase_index_ = 0;
  std::size_t batch_ = 0;
  std::vector<BatchMetrics> history_;
};

void save_checkpoint(const Experiment& experiment, const std::filesystem::path& path);
Experiment load_checkpoint(const World& world, const ExperimentConfig& config,
                           const std::filesystem::path& path);

PolicyParams initial_params(const ExperimentConfig& config);

// ---------------------------------------------------------------------------
// Output formats.

void write_metrics_csv(std::ostream& out, std::span<const BatchMetrics> history);
nlohmann::json metrics_to_json(const BatchMetrics& metrics);
BatchMetrics metrics_from_json(const nlohmann::json& j);

// One JSON object per episode; every step carries the whole beam's features.
void write_transcripts(std::ostream& out, const BatchResult& batch);

struct Comparison {
  std::string condition;
  std::string baseline;
  double condition_success = 0.0;
  double baseline_success = 0.0;
  double condition_length = 0.0;
  double baseline_length = 0.0;
  stats::WelchResult success;
  stats::WelchResult length;
};

// Welch tests on the per-episode indicators and lengths of two batches. Two
// constant samples with different means give t = +-inf and p = 0.
Comparison compare_batches(const std::string& condition, const BatchMetrics& a,
                           const std::string& baseline, const BatchMetrics& b);
nlohmann::json comparison_to_json(const Comparison& c);

// Final test batch against the 1-in-4 random-guess floor.
stats::WelchResult versus_chance(const BatchMetrics& metrics, double floor = 0.25);

nlohmann::json run_summary(const ExperimentConfig& config, std::span<const BatchMetrics> history);

// ---------------------------------------------------------------------------
// Ablation: the full policy, one run per masked condition, and the static
// baseline, all on the same world and master seed.

struct AblationCondition {
  std::string name;
  std::vector<std::string> ablate;
};

struct AblationResult {
  std::vector<std::string> names;
  std::vector<std::vector<BatchMetrics>> histories;
  std::vector<Comparison> versus_static;
  std::vector<Comparison> versus_full;
};

AblationResult run_ablation(const World& world, const ExperimentConfig& config,
                            std::span<const AblationCondition> conditions);
nlohmann::json ablation_to_json(const AblationResult& result);

}  // namespace oal
