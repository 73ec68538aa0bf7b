#include "oal/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <omp.h>

namespace oal::kernels {
namespace {

std::vector<RegionId> reference_set(const Corpus& corpus, const DensityConfig& config) {
  std::vector<RegionId> refs(corpus.size());
  for (std::uint32_t i = 0; i < corpus.size(); ++i) refs[i] = RegionId{i};
  if (config.reference_sample == 0 || config.reference_sample >= corpus.size()) return refs;
  SeedStream rng(derive_seed(config.seed, {0xde, 1}));
  for (std::size_t j = 0; j < config.reference_sample; ++j)
    std::swap(refs[j], refs[j + rng.index(refs.size() - j)]);
  refs.resize(config.reference_sample);
  std::sort(refs.begin(), refs.end());
  return refs;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    s += diff * diff;
  }
  return s;
}

// Everything region i contributes to the index.
void index_region(const Corpus& corpus, std::span<const RegionId> refs, std::size_t k,
                  std::uint32_t i, std::vector<std::pair<double, std::uint32_t>>& scratch,
                  double& avg, std::vector<RegionId>& nn) {
  const auto xi = corpus.features(RegionId{i});
  double total = 0.0;
  std::size_t count = 0;
  for (auto r : refs) {
    if (r.value == i) continue;
    total += cosine_distance(xi, corpus.features(r));
    ++count;
  }
  avg = count == 0 ? 0.0 : total / static_cast<double>(count);

  scratch.clear();
  for (std::uint32_t j = 0; j < corpus.size(); ++j)
    if (j != i) scratch.emplace_back(squared_distance(xi, corpus.features(RegionId{j})), j);
  const std::size_t kk = std::min(k, scratch.size());
  std::partial_sort(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(kk), scratch.end());
  nn.clear();
  for (std::size_t j = 0; j < kk; ++j) nn.push_back(RegionId{scratch[j].second});
}

DensityIndex empty_index(const Corpus& corpus, const DensityConfig& config) {
  DensityIndex index;
  index.k = config.k;
  index.avg_cosine_distance.assign(corpus.size(), 0.0);
  index.neighbours.resize(corpus.size());
  return index;
}

}  // namespace

DensityIndex build_density_index_serial(const Corpus& corpus, const DensityConfig& config) {
  auto index = empty_index(corpus, config);
  const auto refs = reference_set(corpus, config);
  std::vector<std::pair<double, std::uint32_t>> scratch;
  for (std::uint32_t i = 0; i < corpus.size(); ++i)
    index_region(corpus, refs, config.k, i, scratch, index.avg_cosine_distance[i],
                 index.neighbours[i]);
  return index;
}

DensityIndex build_density_index(const Corpus& corpus, const DensityConfig& config) {
  auto index = empty_index(corpus, config);
  const auto refs = reference_set(corpus, config);
  const auto n = static_cast<std::int64_t>(corpus.size());
#pragma omp parallel
  {
    std::vector<std::pair<double, std::uint32_t>> scratch;
#pragma omp for schedule(dynamic, 16)
    for (std::int64_t i = 0; i < n; ++i) {
      const auto u = static_cast<std::uint32_t>(i);
      index_region(corpus, refs, config.k, u, scratch, index.avg_cosine_distance[u],
                   index.neighbours[u]);
    }
  }
  return index;
}

void refresh_models_serial(std::map<std::string, PredicateModel>& models,
                           std::span<const std::string> predicates, const Corpus& corpus,
                           const ClassifierConfig& config) {
  for (const auto& p : predicates) refresh_model(models.at(p), corpus, config);
}

void refresh_models(std::map<std::string, PredicateModel>& models,
                    std::span<const std::string> predicates, const Corpus& corpus,
                    const ClassifierConfig& config) {
  // Resolve map nodes up front; the loop body then touches disjoint models.
  std::vector<PredicateModel*> targets;
  targets.reserve(predicates.size());
  for (const auto& p : predicates) targets.push_back(&models.at(p));
  const auto n = static_cast<std::int64_t>(targets.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t i = 0; i < n; ++i) refresh_model(*targets[static_cast<std::size_t>(i)], corpus, config);
}

int max_threads() { return omp_get_max_threads(); }

}  // namespace oal::kernels
