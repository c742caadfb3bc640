#pragma once

#include <vector>

namespace jpmbn {

struct HeadingSample {
    double theta_deg = 0.0;  ///< clockwise from north, [-180, 180]
    double weight = 1.0;
};

/// Heading-direction probability model: a weighted von Mises kernel mixture
/// over historical headings.
struct DirectionalModel {
    std::vector<HeadingSample> samples;
    double kappa = 4.0;
    double h_d_km = 200.0;  ///< distance bandwidth used to weight the samples

    void validate() const;
};

/// Kernel-mixture density in 1/radian at heading `theta_deg`.
/// Integrates to one over the circle.
double heading_density(const DirectionalModel& model, double theta_deg);

/// Tabulated CDF of the heading density on [-180, 180] degrees with
/// piecewise-linear (monotone) interpolation, used as the copula's fourth marginal.
class HeadingCdf {
public:
    explicit HeadingCdf(const DirectionalModel& model, std::size_t intervals = 7200);

    double cdf(double theta_deg) const;
    double quantile(double u) const;

private:
    double step_deg_;
    std::vector<double> cdf_;
};

}  // namespace jpmbn
