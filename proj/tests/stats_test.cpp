#include <gtest/gtest.h>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <cmath>

#include "oal/rng.hpp"
#include "oal/stats.hpp"

using namespace oal;

namespace {

// Reference Welch test built on boost's Student-t.
stats::WelchResult reference(const std::vector<double>& a, const std::vector<double>& b) {
  auto moments = [](const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= double(v.size());
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::pair{m, s / double(v.size() - 1)};
  };
  const auto [ma, va] = moments(a);
  const auto [mb, vb] = moments(b);
  const double qa = va / double(a.size()), qb = vb / double(b.size());
  stats::WelchResult r;
  r.t = (ma - mb) / std::sqrt(qa + qb);
  r.df = (qa + qb) * (qa + qb) /
         (qa * qa / double(a.size() - 1) + qb * qb / double(b.size() - 1));
  const boost::math::students_t dist(r.df);
  r.p_two_sided = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t)));
  return r;
}

}  // namespace

TEST(Welch, WorkedExample) {
  const std::vector<double> a{1, 2, 3, 4}, b{2, 4, 6, 8};
  const auto r = stats::welch_t_test(a, b);
  EXPECT_NEAR(r.t, -1.7321, 5e-5);
  EXPECT_NEAR(r.df, 4.41, 5e-3);
  const auto ref = reference(a, b);
  EXPECT_NEAR(r.p_two_sided, ref.p_two_sided, 1e-8);
}

TEST(Welch, MatchesReferenceOnRandomPairs) {
  SeedStream s(12);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> a(2 + s.index(60)), b(2 + s.index(60));
    const double shift = s.normal();
    for (auto& v : a) v = s.normal() * (0.5 + s.uniform());
    for (auto& v : b) v = shift + s.normal() * (0.5 + 2 * s.uniform());
    const auto r = stats::welch_t_test(a, b);
    const auto ref = reference(a, b);
    EXPECT_NEAR(r.t, ref.t, 1e-6);
    EXPECT_NEAR(r.df, ref.df, 1e-6);
    EXPECT_NEAR(r.p_two_sided, ref.p_two_sided, 1e-6);
  }
}

TEST(Welch, BernoulliIndicators) {
  SeedStream s(13);
  std::vector<double> a(100), b(100);
  for (auto& v : a) v = s.uniform() < 0.6;
  for (auto& v : b) v = s.uniform() < 0.3;
  const auto r = stats::welch_t_test(a, b);
  const auto ref = reference(a, b);
  EXPECT_NEAR(r.p_two_sided, ref.p_two_sided, 1e-8);
}

TEST(Welch, DegenerateSamples) {
  const std::vector<double> ones(10, 1.0), zeros(10, 0.0);
  const auto same = stats::welch_t_test(ones, ones);
  EXPECT_EQ(same.t, 0.0);
  EXPECT_EQ(same.p_two_sided, 1.0);
  EXPECT_THROW(stats::welch_t_test(ones, zeros), stats::DegenerateVariance);
  const std::vector<double> single{1.0};
  EXPECT_THROW(stats::welch_t_test(single, ones), Error);
}

TEST(IncompleteBeta, MatchesBoost) {
  SeedStream s(14);
  for (int i = 0; i < 200; ++i) {
    const double a = 0.1 + 50 * s.uniform(), b = 0.1 + 50 * s.uniform(), x = s.uniform();
    EXPECT_NEAR(stats::incomplete_beta(a, b, x), boost::math::ibeta(a, b, x), 1e-10)
        << a << " " << b << " " << x;
  }
  EXPECT_EQ(stats::incomplete_beta(2.0, 3.0, 0.0), 0.0);
  EXPECT_EQ(stats::incomplete_beta(2.0, 3.0, 1.0), 1.0);
}

TEST(StudentT, MatchesBoost) {
  for (double df : {1.0, 2.5, 4.41, 30.0, 500.0})
    for (double t : {0.0, 0.3, 1.0, 2.0, 5.0, -3.0}) {
      const boost::math::students_t dist(df);
      const double ref = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
      EXPECT_NEAR(stats::student_t_two_sided(t, df), ref, 1e-10);
    }
}

TEST(Moments, MeanAndVariance) {
  const std::vector<double> v{1, 2, 3, 4};
  EXPECT_DOUBLE_EQ(stats::mean(v), 2.5);
  EXPECT_DOUBLE_EQ(stats::sample_variance(v), 5.0 / 3.0);
}
