#pragma once

#include <span>
#include <stdexcept>

namespace jpmbn {

class DistributionError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

double std_normal_cdf(double z);
/// Upper tail 1 - Phi(z), accurate for large z.
double std_normal_sf(double z);
/// Phi^-1(u) for u in (0, 1).
double std_normal_quantile(double u);

/// Weibull(scale a, shape b) truncated to [lower, upper].
struct TruncatedWeibull {
    double a = 1.0;
    double b = 1.0;
    double lower = 0.0;
    double upper = 1.0;

    /// Throws DistributionError on bad parameters or a degenerate truncation.
    void validate() const;
    double cdf(double x) const;
    double pdf(double x) const;
    double quantile(double u) const;
};

/// ln X ~ Normal(lambda, zeta^2).
struct LognormalMarginal {
    double lambda = 0.0;
    double zeta = 1.0;

    void validate() const;
    double cdf(double x) const;
    double pdf(double x) const;
    double quantile(double u) const;
    double median() const;
};

inline double marginal_cdf(const TruncatedWeibull& m, double x) { return m.cdf(x); }
inline double marginal_cdf(const LognormalMarginal& m, double x) { return m.cdf(x); }

/// Weighted maximum-likelihood lognormal fit (closed form).
LognormalMarginal fit_lognormal(std::span<const double> values, std::span<const double> weights);

/// Weighted maximum-likelihood fit of scale and shape with fixed truncation bounds.
/// Values outside [lower, upper] are ignored.
TruncatedWeibull fit_truncated_weibull(std::span<const double> values,
                                       std::span<const double> weights, double lower,
                                       double upper);

}  // namespace jpmbn
