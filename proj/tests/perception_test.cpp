#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "fixtures.hpp"
#include "oal/kernels.hpp"
#include "oal/perception.hpp"

using namespace oal;
using oal::testing::region;

namespace {

// Positives at x0 > 0, negatives at x0 < 0, well apart.
Corpus line_corpus() {
  std::vector<Region> rs;
  const double xs[] = {2.0, 2.5, 3.0, -2.0, -2.5, -3.0, 0.1, -0.1};
  for (int i = 0; i < 8; ++i)
    rs.push_back(region("r" + std::to_string(i), {xs[i], 0.1 * i}, {xs[i] > 0 ? "pos" : "neg"}));
  return Corpus(rs);
}

PredicateModel with_labels(std::initializer_list<std::pair<std::uint32_t, int>> labels) {
  PredicateModel m;
  m.predicate = "pos";
  for (auto [r, y] : labels) m.add_label({r}, y > 0 ? Label::Positive : Label::Negative);
  return m;
}

}  // namespace

TEST(Labels, RelabelSameIsNoopDifferentThrows) {
  auto m = with_labels({{0, 1}});
  EXPECT_FALSE(m.add_label({0}, Label::Positive));
  EXPECT_EQ(m.labels.size(), 1u);
  EXPECT_THROW(m.add_label({0}, Label::Negative), ContractError);
}

TEST(Train, TwoByTwoSeparableFitsTrainingPoints) {
  const auto corpus = line_corpus();
  auto m = with_labels({{0, 1}, {1, 1}, {3, -1}, {4, -1}});
  train_classifier(m, corpus, {});
  ASSERT_TRUE(m.weights);
  EXPECT_EQ(m.weights->size(), 3u);
  for (auto [r, y] : m.labels) EXPECT_EQ(decide(m, corpus.features(r)), y);
}

TEST(Train, SingleClassLeavesNoWeights) {
  const auto corpus = line_corpus();
  auto m = with_labels({{0, 1}, {1, 1}, {2, 1}});
  refresh_model(m, corpus, {});
  EXPECT_FALSE(m.weights);
  EXPECT_EQ(m.estimated_f1, 0.0);
}

TEST(Train, PureFunctionOfLabelSet) {
  const auto corpus = line_corpus();
  auto a = with_labels({{0, 1}, {3, -1}, {1, 1}, {4, -1}, {6, 1}});
  auto b = with_labels({{6, 1}, {4, -1}, {3, -1}, {1, 1}, {0, 1}});
  train_classifier(a, corpus, {});
  train_classifier(b, corpus, {});
  EXPECT_EQ(*a.weights, *b.weights);
  train_classifier(a, corpus, {});
  EXPECT_EQ(*a.weights, *b.weights);
}

TEST(Decide, SignRules) {
  PredicateModel m;
  const std::vector<double> x{1.0, 2.0};
  EXPECT_EQ(decide(m, x), Label::Negative);
  m.weights = std::vector<double>{1.0, 0.0, 0.0};
  EXPECT_EQ(decide(m, x), Label::Positive);
  m.weights = std::vector<double>{-1.0, 0.0, 0.0};
  EXPECT_EQ(decide(m, x), Label::Negative);
  m.weights = std::vector<double>{2.0, -1.0, 0.0};
  EXPECT_EQ(linear_score(*m.weights, x), 0.0);
  EXPECT_EQ(decide(m, x), Label::Positive);
}

TEST(Margin, HandGeometry) {
  PredicateModel m;
  m.weights = std::vector<double>{1.0, 0.0, 0.0};
  EXPECT_DOUBLE_EQ(margin(m, std::vector<double>{0.5, 3.0}), 0.5);
  EXPECT_EQ(margin(m, std::vector<double>{0.0, 7.0}), 0.0);
  m.weights = std::vector<double>{3.0, 4.0, -5.0};
  EXPECT_DOUBLE_EQ(margin(m, std::vector<double>{0.0, 0.0}), 1.0);
  m.weights.reset();
  EXPECT_THROW(margin(m, std::vector<double>{0.0, 0.0}), ContractError);
}

TEST(Margin, AgreesWithDecisionSign) {
  const auto corpus = oal::testing::two_predicate_corpus(60, 4, 3);
  PredicateModel m;
  m.predicate = "a";
  for (std::uint32_t i = 0; i < 30; ++i) m.add_label({i}, label_from_bool(corpus[{i}].has("a")));
  train_classifier(m, corpus, {});
  ASSERT_TRUE(m.weights);
  for (std::uint32_t i = 0; i < corpus.size(); ++i) {
    const auto x = corpus.features({i});
    const double s = linear_score(*m.weights, x);
    EXPECT_EQ(decide(m, x) == Label::Positive, s >= 0.0);
    EXPECT_GE(margin(m, x), 0.0);
  }
}

TEST(F1, ScoreFromCounts) {
  EXPECT_DOUBLE_EQ(f1_score(5, 0, 0), 1.0);
  EXPECT_DOUBLE_EQ(f1_score(0, 3, 2), 0.0);
  EXPECT_DOUBLE_EQ(f1_score(2, 1, 1), 2.0 / 3.0);
}

TEST(F1, ThreeAndThreeSeparableIsOne) {
  const auto corpus = line_corpus();
  const auto m = with_labels({{0, 1}, {1, 1}, {2, 1}, {3, -1}, {4, -1}, {5, -1}});
  EXPECT_DOUBLE_EQ(estimate_f1(m, corpus, {}), 1.0);
}

TEST(F1, DegenerateSetsAreZero) {
  const auto corpus = line_corpus();
  EXPECT_EQ(estimate_f1(with_labels({{0, 1}}), corpus, {}), 0.0);
  EXPECT_EQ(estimate_f1(with_labels({{0, 1}, {3, -1}, {4, -1}}), corpus, {}), 0.0);
  EXPECT_EQ(estimate_f1(with_labels({{0, 1}, {1, 1}, {2, 1}, {6, 1}}), corpus, {}), 0.0);
  // One positive: a single stratified fold cannot hold anything out.
  EXPECT_EQ(estimate_f1(with_labels({{0, 1}, {3, -1}, {4, -1}, {5, -1}}), corpus, {}), 0.0);
}

TEST(F1, IndependentOfInsertionOrder) {
  const auto corpus = line_corpus();
  const auto a = with_labels({{0, 1}, {1, 1}, {6, 1}, {3, -1}, {4, -1}, {7, -1}});
  const auto b = with_labels({{7, -1}, {6, 1}, {4, -1}, {3, -1}, {1, 1}, {0, 1}});
  EXPECT_EQ(estimate_f1(a, corpus, {}), estimate_f1(b, corpus, {}));
}

TEST(F1, NonDecreasingInExpectationAsLabelsAccumulate) {
  // Averaged over seeds, F1 with 12 balanced labels is at least F1 with 6.
  double small = 0.0, large = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto corpus = oal::testing::two_predicate_corpus(200, 4, seed);
    PredicateModel m;
    m.predicate = "a";
    std::size_t pos = 0, neg = 0;
    for (std::uint32_t i = 0; i < corpus.size() && (pos < 6 || neg < 6); ++i) {
      const bool y = corpus[{i}].has("a");
      if (y && pos < 6) {
        m.add_label({i}, Label::Positive);
        ++pos;
      } else if (!y && neg < 6) {
        m.add_label({i}, Label::Negative);
        ++neg;
      }
      if (pos == 3 && neg == 3 && m.labels.size() == 6) small += estimate_f1(m, corpus, {});
    }
    large += estimate_f1(m, corpus, {});
  }
  EXPECT_GE(large, small);
}

// ---------------------------------------------------------------------------

TEST(Density, CosineDistance) {
  EXPECT_NEAR(cosine_distance(std::vector<double>{1, 0}, std::vector<double>{0, 1}), 1.0, 1e-15);
  EXPECT_NEAR(cosine_distance(std::vector<double>{1, 1}, std::vector<double>{2, 2}), 0.0, 1e-15);
  EXPECT_NEAR(cosine_distance(std::vector<double>{1, 0}, std::vector<double>{-3, 0}), 2.0, 1e-15);
  EXPECT_EQ(cosine_distance(std::vector<double>{0, 0}, std::vector<double>{1, 0}), 1.0);
}

TEST(Density, IndexInvariantsAndBruteForce) {
  const auto corpus = oal::testing::two_predicate_corpus(40, 3, 4);
  const auto idx = kernels::build_density_index_serial(corpus, {4, 0, 0});
  ASSERT_EQ(idx.size(), corpus.size());
  for (std::uint32_t i = 0; i < corpus.size(); ++i) {
    double sum = 0.0;
    for (std::uint32_t j = 0; j < corpus.size(); ++j)
      if (j != i) sum += cosine_distance(corpus.features({i}), corpus.features({j}));
    EXPECT_NEAR(idx.avg_cosine_distance[i], sum / (corpus.size() - 1), 1e-12);
    EXPECT_GE(idx.avg_cosine_distance[i], 0.0);
    EXPECT_LE(idx.avg_cosine_distance[i], 2.0);
    const auto& nn = idx.neighbours[i];
    ASSERT_EQ(nn.size(), 4u);
    EXPECT_EQ(std::set<RegionId>(nn.begin(), nn.end()).size(), 4u);
    for (auto r : nn) EXPECT_NE(r.value, i);
    // Brute-force: no excluded region is strictly closer than the farthest kept one.
    auto dist = [&](std::uint32_t j) {
      double s = 0.0;
      for (std::size_t t = 0; t < 3; ++t) {
        const double diff = corpus.features({i})[t] - corpus.features({j})[t];
        s += diff * diff;
      }
      return s;
    };
    double worst = 0.0;
    for (auto r : nn) worst = std::max(worst, dist(r.value));
    for (std::uint32_t j = 0; j < corpus.size(); ++j)
      if (j != i && std::find(nn.begin(), nn.end(), RegionId{j}) == nn.end())
        EXPECT_GE(dist(j), worst);
  }
}

TEST(Density, SmallCorpusKeepsNMinusOneNeighbours) {
  const auto corpus = oal::testing::two_predicate_corpus(5, 2, 4);
  const auto idx = kernels::build_density_index_serial(corpus, {10, 0, 0});
  for (const auto& nn : idx.neighbours) EXPECT_EQ(nn.size(), 4u);
}

TEST(Density, DuplicatedPointSameAverage) {
  std::vector<Region> rs{region("a", {1, 2}, {"x"}), region("b", {1, 2}, {"x"}),
                         region("c", {-1, 0.5}, {"x"}), region("d", {0.3, -2}, {"x"})};
  const Corpus corpus(rs);
  const auto idx = kernels::build_density_index_serial(corpus, {2, 0, 0});
  EXPECT_DOUBLE_EQ(idx.avg_cosine_distance[0], idx.avg_cosine_distance[1]);
}

TEST(Density, KnnUnlabeledFraction) {
  const auto corpus = oal::testing::two_predicate_corpus(30, 3, 4);
  const auto idx = kernels::build_density_index_serial(corpus, {5, 0, 0});
  PredicateModel m;
  m.predicate = "a";
  EXPECT_EQ(density_stats(idx, {0}, &m).knn_unlabeled_fraction, 1.0);
  EXPECT_EQ(density_stats(idx, {0}, nullptr).knn_unlabeled_fraction, 1.0);
  for (auto r : idx.neighbours[0]) m.add_label(r, Label::Negative);
  EXPECT_EQ(density_stats(idx, {0}, &m).knn_unlabeled_fraction, 0.0);
  m.labels.erase(idx.neighbours[0][0]);
  EXPECT_DOUBLE_EQ(density_stats(idx, {0}, &m).knn_unlabeled_fraction, 0.2);
  EXPECT_THROW(density_stats(idx, {999}, &m), std::out_of_range);
}
