#include "jpmbn/heading.hpp"

#include <algorithm>
#include <cmath>

#include "jpmbn/distributions.hpp"

namespace jpmbn {

namespace {
constexpr double kDegToRad = M_PI / 180.0;
}

void DirectionalModel::validate() const {
    if (!(kappa > 0.0)) throw DistributionError("von Mises concentration must be positive");
    if (!(h_d_km > 0.0)) throw DistributionError("distance bandwidth must be positive");
    double total = 0.0;
    for (const auto& s : samples) {
        if (!(s.weight >= 0.0)) throw DistributionError("heading weights must be nonnegative");
        total += s.weight;
    }
    if (!(total > 0.0)) throw DistributionError("heading model needs a sample with positive weight");
}

double heading_density(const DirectionalModel& model, double theta_deg) {
    model.validate();
    // exp(k cos d) / I0(k) overflows for large k; use the scaled form exp(k (cos d - 1)) / (e^-k I0(k)).
    const double i0_scaled = std::cyl_bessel_i(0.0, model.kappa) * std::exp(-model.kappa);
    double num = 0.0, wsum = 0.0;
    for (const auto& s : model.samples) {
        const double d = (theta_deg - s.theta_deg) * kDegToRad;
        num += s.weight * std::exp(model.kappa * (std::cos(d) - 1.0));
        wsum += s.weight;
    }
    return num / (2.0 * M_PI * i0_scaled * wsum);
}

HeadingCdf::HeadingCdf(const DirectionalModel& model, std::size_t intervals)
    : step_deg_(360.0 / static_cast<double>(intervals)), cdf_(intervals + 1, 0.0) {
    model.validate();
    double prev = heading_density(model, -180.0);
    for (std::size_t k = 1; k <= intervals; ++k) {
        const double cur = heading_density(model, -180.0 + static_cast<double>(k) * step_deg_);
        cdf_[k] = cdf_[k - 1] + 0.5 * (prev + cur) * step_deg_ * kDegToRad;
        prev = cur;
    }
    const double total = cdf_.back();
    for (auto& c : cdf_) c /= total;
    cdf_.back() = 1.0;
}

double HeadingCdf::cdf(double theta_deg) const {
    if (theta_deg <= -180.0) return 0.0;
    if (theta_deg >= 180.0) return 1.0;
    const double pos = (theta_deg + 180.0) / step_deg_;
    const auto k = std::min(static_cast<std::size_t>(pos), cdf_.size() - 2);
    const double t = pos - static_cast<double>(k);
    return cdf_[k] + t * (cdf_[k + 1] - cdf_[k]);
}

double HeadingCdf::quantile(double u) const {
    if (u <= 0.0) return -180.0;
    if (u >= 1.0) return 180.0;
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    const auto k = static_cast<std::size_t>(std::distance(cdf_.begin(), it)) - 1;
    const double span = cdf_[k + 1] - cdf_[k];
    const double t = span > 0.0 ? (u - cdf_[k]) / span : 0.0;
    return -180.0 + (static_cast<double>(k) + t) * step_deg_;
}

}  // namespace jpmbn
