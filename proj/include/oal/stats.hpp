#pragma once

#include <span>

#include "oal/types.hpp"

namespace oal::stats {

// Regularized incomplete beta I_x(a, b), continued fraction (modified Lentz).
double incomplete_beta(double a, double b, double x);

// Two-sided tail probability of Student's t with df degrees of freedom.
double student_t_two_sided(double t, double df);

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p_two_sided = 1.0;
};

struct DegenerateVariance : Error {
  using Error::Error;
};

// Unequal-variance two-sample t-test with Welch-Satterthwaite degrees of
// freedom. Both samples need at least two values. When both variances are
// zero, equal means give t = 0, p = 1 and unequal means throw
// DegenerateVariance.
WelchResult welch_t_test(std::span<const double> a, std::span<const double> b);

double mean(std::span<const double> values);
double sample_variance(std::span<const double> values);

}  // namespace oal::stats
