#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "oal/corpus.hpp"
#include "oal/dialog.hpp"
#include "oal/kernels.hpp"
#include "oal/policy.hpp"

namespace oal {

enum class PolicyKind { Learned, Static };
const char* to_string(PolicyKind kind);

struct PhaseBatches {
  std::size_t init = 10;
  std::size_t train = 10;
  std::size_t test = 10;
};

struct PolicyHyper {
  double alpha = 1e-3;
  std::size_t alpha_decay_updates = 0;
  bool baseline = false;
};

// Where the regions come from: a file, or the synthetic generator.
struct CorpusSource {
  std::optional<std::filesystem::path> path;
  std::optional<CorpusFormat> format;
  SyntheticConfig synthetic;
};

struct ExperimentConfig {
  std::uint64_t master_seed = 1;
  // Policy that acts in the training and testing phases. Initialization
  // always runs the static policy.
  PolicyKind policy = PolicyKind::Learned;
  PhaseBatches batches;
  std::size_t batch_size = 100;
  InteractionSizes sizes;
  SplitConfig split;
  EnvConfig env;
  StaticPolicyConfig static_policy;
  PolicyHyper policy_params;
  DensityConfig density;
  std::vector<std::string> ablate;
  CorpusSource corpus;
  kernels::Execution execution = kernels::Execution::Parallel;

  // Throws ConfigError on any violated invariant.
  void validate() const;
};

// Strict schema: unknown keys and wrong types are ConfigErrors. Keys absent
// from the document keep the values already in `base`.
ExperimentConfig config_from_json(const nlohmann::json& doc, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});
nlohmann::json config_to_json(const ExperimentConfig& config);

// The desk-scale benchmark: 600 synthetic regions, d = 32, 24 half-space
// predicates, descriptions of 1-3 predicates, split threshold 100 regions and
// alpha 1e-6 (returns are in the hundreds). Everything else at the defaults.
ExperimentConfig benchmark_config(std::uint64_t master_seed);

}  // namespace oal
