#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace attrinf {

// Survival function of the chi-square distribution: P(X > x) with `df`
// degrees of freedom.
double chi_square_sf(double x, int df);

struct ChiSquareResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

// Pearson goodness-of-fit of observed counts against expected counts.
// Requires every expected count >= 5 (the usual applicability rule) and
// throws ValidationError otherwise.
ChiSquareResult chi_square_gof(const std::vector<double>& observed,
                               const std::vector<double>& expected);

// Pearson correlation coefficient; nullopt when either side has zero
// variance or fewer than two points are given.
std::optional<double> pearson_r(const std::vector<double>& x,
                                const std::vector<double>& y);

// log P(X = k) for X ~ Poisson(mean). mean == 0 is the point mass at 0.
double poisson_log_pmf(std::int64_t k, double mean);

// log of the binomial coefficient C(n, k); -inf outside 0 <= k <= n.
double log_binomial(std::int64_t n, std::int64_t k);

}  // namespace attrinf
