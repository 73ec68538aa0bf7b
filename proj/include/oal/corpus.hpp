#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "oal/rng.hpp"
#include "oal/types.hpp"

namespace oal {

// One candidate object.
struct Region {
  std::string id;
  std::vector<double> features;
  // Normalized predicates, sorted and unique.
  std::vector<std::string> annotations;
  // Raw description text when ingested from real data; empty for synthetic
  // regions whose description is a predicate list.
  std::string description_text;
  // Extracted description predicates in order. Empty means "no description",
  // such a region is never chosen as a target.
  std::vector<std::string> description;

  bool has(const std::string& predicate) const;
};

// Immutable region table with a fixed feature dimension.
class Corpus {
 public:
  Corpus() = default;
  // Validates dimension, duplicate ids and the description invariant.
  explicit Corpus(std::vector<Region> regions);

  std::size_t size() const { return regions_.size(); }
  std::size_t dimension() const { return dimension_; }
  const Region& operator[](RegionId id) const { return regions_.at(id.value); }
  std::span<const Region> regions() const { return regions_; }
  std::span<const double> features(RegionId id) const { return regions_.at(id.value).features; }
  std::optional<RegionId> find(const std::string& id) const;

 private:
  std::vector<Region> regions_;
  std::size_t dimension_ = 0;
};

enum class CorpusFormat { AnnotationJson, Tabular };

CorpusFormat format_from_path(const std::filesystem::path& path);
CorpusFormat parse_corpus_format(const std::string& name);

// annotation-json is JSON Lines, one record per region:
//   {"id": "r1", "features": [..], "annotations": ["Red Box!", ...],
//    "description": "the red box"}          (raw text)
//   "description": ["red", "box"]            (pre-tokenized predicate list)
// tabular is a header row `id,f0,...,f{d-1},annotations[,description]` with
// pipe-separated annotations. Neither field may contain commas.
std::vector<Region> load_regions(const std::filesystem::path& path, CorpusFormat format);
std::vector<Region> read_regions(std::istream& in, CorpusFormat format);
void write_regions(std::ostream& out, std::span<const Region> regions, CorpusFormat format);

struct FrequencyProfile {
  // Predicate i (0-based) covers a fraction of the feature distribution
  // interpolated geometrically from max_frequency to min_frequency.
  double max_frequency = 0.30;
  double min_frequency = 0.04;
};

struct SyntheticConfig {
  std::size_t n_regions = 600;
  std::size_t dimension = 32;
  std::size_t n_predicates = 24;
  FrequencyProfile profile;
  std::size_t description_min = 1;
  std::size_t description_max = 3;
  std::uint64_t seed = 7;
  // Resample budget per region before giving up.
  std::size_t max_attempts_per_region = 10000;
};

// Half-space predicate: x is positive iff dot(normal, x) >= offset.
struct HalfSpace {
  std::vector<double> normal;
  double offset = 0.0;
  bool contains(std::span<const double> x) const;
};

struct SyntheticCorpus {
  std::vector<Region> regions;
  std::vector<std::string> predicate_names;
  std::vector<HalfSpace> half_spaces;
};

// Features are standard normal; annotations are exactly the predicates whose
// half-space contains the point; empty-annotation draws are resampled.
SyntheticCorpus generate_synthetic(const SyntheticConfig& config);

enum class PolicySide { Train, Test };
const char* to_string(PolicySide side);

struct CorpusSplit {
  std::vector<RegionId> policy_train_classifier_train;
  std::vector<RegionId> policy_train_classifier_test;
  std::vector<RegionId> policy_test_classifier_train;
  std::vector<RegionId> policy_test_classifier_test;
  std::set<std::string> held_out_predicates;

  std::span<const RegionId> classifier_train(PolicySide side) const;
  std::span<const RegionId> classifier_test(PolicySide side) const;
};

struct SplitConfig {
  std::size_t frequency_threshold = 1000;
  double test_fraction_of_frequent = 0.5;
  double classifier_split = 0.6;
  std::uint64_t seed = 0;
};

CorpusSplit make_splits(const Corpus& corpus, const SplitConfig& config);

struct Interaction {
  std::vector<RegionId> active_train;
  std::vector<RegionId> active_test;
  RegionId target;
  std::vector<std::string> description;
};

struct InteractionSizes {
  std::size_t train = 8;
  std::size_t test = 4;
};

Interaction sample_interaction(const Corpus& corpus, const CorpusSplit& split, PolicySide side,
                               const InteractionSizes& sizes, SeedStream& stream);

}  // namespace oal
