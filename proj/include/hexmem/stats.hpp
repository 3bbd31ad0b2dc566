#pragma once

#include <optional>
#include <span>

namespace hexmem::stats {

double mean(std::span<const double> x);
// Sample variance (n - 1 denominator). Requires n >= 2.
double sample_variance(std::span<const double> x);

struct TTest {
  double t = 0.0;
  int df = 0;
};

// Paired t-test on d = x - y: t = mean(d) / (sd(d) / sqrt(n)), df = n - 1.
// Zero-variance differences give t = 0 when the mean is zero and +/-inf
// otherwise. Throws DomainError for unequal lengths or n < 2.
TTest paired_t_test(std::span<const double> x, std::span<const double> y);

// Sample Pearson correlation; nullopt when either input is constant.
std::optional<double> pearson_r(std::span<const double> x, std::span<const double> y);

// Two-sided 5% critical value of Student's t at 51 degrees of freedom.
inline constexpr double kCriticalT51 = 2.008;

}  // namespace hexmem::stats
