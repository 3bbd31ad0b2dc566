#include "hexmem/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "hexmem/errors.hpp"

namespace hexmem::stats {

double mean(std::span<const double> x) {
  if (x.empty()) throw DomainError("mean of an empty sample");
  double sum = 0.0;
  for (double v : x) sum += v;
  return sum / static_cast<double>(x.size());
}

double sample_variance(std::span<const double> x) {
  if (x.size() < 2) throw DomainError("sample variance needs at least two values");
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return ss / static_cast<double>(x.size() - 1);
}

TTest paired_t_test(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DomainError("paired t-test needs equal-length samples");
  if (x.size() < 2) throw DomainError("paired t-test needs at least two pairs");
  std::vector<double> d(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) d[i] = x[i] - y[i];
  const double md = mean(d);
  const double var = sample_variance(d);
  const int df = static_cast<int>(d.size()) - 1;
  if (var == 0.0) {
    if (md == 0.0) return {0.0, df};
    return {std::copysign(std::numeric_limits<double>::infinity(), md), df};
  }
  return {md / std::sqrt(var / static_cast<double>(d.size())), df};
}

std::optional<double> pearson_r(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DomainError("correlation needs equal-length samples");
  if (x.size() < 2) throw DomainError("correlation needs at least two points");
  const auto constant = [](std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [&](double e) { return e == v.front(); });
  };
  if (constant(x) || constant(y)) return std::nullopt;
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace hexmem::stats
