#include "csfusion/stats.hpp"

#include <algorithm>
#include <cmath>

#include "csfusion/errors.hpp"

namespace csfusion {

double chi2_3_cdf(double x) {
  if (x <= 0.0) return 0.0;
  // P(chi2_3 <= x) = erf(sqrt(x/2)) - sqrt(2x/pi) exp(-x/2)
  return std::erf(std::sqrt(0.5 * x)) -
         std::sqrt(2.0 * x / M_PI) * std::exp(-0.5 * x);
}

double chi_3_cdf(double z) { return z <= 0.0 ? 0.0 : chi2_3_cdf(z * z); }

double chi2_3_quantile(double prob) {
  if (!(prob > 0.0 && prob < 1.0))
    throw InvalidConfigError("quantile probability must lie in (0, 1)");
  double lo = 0.0, hi = 1.0;
  while (chi2_3_cdf(hi) < prob) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (chi2_3_cdf(mid) < prob ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double ks_statistic(std::vector<double> samples,
                    const std::function<double(double)>& cdf) {
  if (samples.empty()) throw InvalidConfigError("KS statistic needs samples");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
  }
  return d;
}

double ks_critical(double alpha, std::size_t n) {
  return std::sqrt(-0.5 * std::log(0.5 * alpha)) / std::sqrt(static_cast<double>(n));
}

double sample_mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double mu = sample_mean(v);
  double acc = 0.0;
  for (double x : v) acc += (x - mu) * (x - mu);
  return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

}  // namespace csfusion
