#include "attrinf/stats.hpp"

#include <gsl/gsl_cdf.h>
#include <gsl/gsl_errno.h>

#include <cmath>
#include <limits>
#include <string>

#include "attrinf/common.hpp"

namespace attrinf {

namespace {

// GSL aborts by default; install a no-op handler once and rely on return
// values instead.
struct GslHandlerGuard {
  GslHandlerGuard() { gsl_set_error_handler_off(); }
};
const GslHandlerGuard gsl_handler_guard;

}  // namespace

double chi_square_sf(double x, int df) {
  if (df < 1) throw ValidationError("chi-square needs df >= 1");
  if (!(x >= 0.0))
    throw ValidationError("chi-square statistic must be non-negative");
  if (x == 0.0) return 1.0;
  return gsl_cdf_chisq_Q(x, static_cast<double>(df));
}

ChiSquareResult chi_square_gof(const std::vector<double>& observed,
                               const std::vector<double>& expected) {
  if (observed.size() != expected.size() || observed.size() < 2)
    throw ValidationError("chi-square needs matching count vectors of size >= 2");
  double stat = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (expected[i] < 5.0)
      throw ValidationError(
          "chi-square not applicable: expected count " +
          std::to_string(expected[i]) + " in cell " + std::to_string(i) +
          " is below 5");
    double diff = observed[i] - expected[i];
    stat += diff * diff / expected[i];
  }
  int df = static_cast<int>(observed.size()) - 1;
  return {stat, chi_square_sf(stat, df)};
}

std::optional<double> pearson_r(const std::vector<double>& x,
                                const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) return std::nullopt;
  double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

double poisson_log_pmf(std::int64_t k, double mean) {
  if (k < 0) return -std::numeric_limits<double>::infinity();
  if (mean <= 0.0)
    return k == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  return static_cast<double>(k) * std::log(mean) - mean -
         std::lgamma(static_cast<double>(k) + 1.0);
}

double log_binomial(std::int64_t n, std::int64_t k) {
  if (k < 0 || k > n) return -std::numeric_limits<double>::infinity();
  if (k == 0 || k == n) return 0.0;
  return std::lgamma(static_cast<double>(n) + 1.0) -
         std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(n - k) + 1.0);
}

}  // namespace attrinf
