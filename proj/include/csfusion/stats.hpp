#pragma once

#include <functional>
#include <vector>

namespace csfusion {

/// Mean of the chi distribution with 3 degrees of freedom, 2*sqrt(2/pi).
inline constexpr double kChi3Mean = 1.5957691216057308;

/// CDF of the chi-squared distribution with 3 degrees of freedom (closed
/// form for odd dof).
double chi2_3_cdf(double x);

/// CDF of the chi distribution with 3 degrees of freedom.
double chi_3_cdf(double z);

/// Upper quantile of chi-squared with 3 dof, by bisection.
double chi2_3_quantile(double prob);

/// One-sample Kolmogorov-Smirnov statistic against a reference CDF.
double ks_statistic(std::vector<double> samples,
                    const std::function<double(double)>& cdf);

/// Asymptotic KS critical value at significance alpha for n samples.
double ks_critical(double alpha, std::size_t n);

double sample_mean(const std::vector<double>& v);
double sample_std(const std::vector<double>& v);

}  // namespace csfusion
