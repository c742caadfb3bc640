#include "jpmbn/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <boost/math/distributions/normal.hpp>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

namespace jpmbn {

namespace {
const boost::math::normal_distribution<double> kStdNormal{0.0, 1.0};

double weibull_sf(double x, double a, double b) {
    if (x <= 0.0) return 1.0;
    return std::exp(-std::pow(x / a, b));
}
}  // namespace

double std_normal_cdf(double z) {
    if (std::isinf(z)) return z > 0 ? 1.0 : 0.0;
    return boost::math::cdf(kStdNormal, z);
}

double std_normal_sf(double z) {
    if (std::isinf(z)) return z > 0 ? 0.0 : 1.0;
    return boost::math::cdf(boost::math::complement(kStdNormal, z));
}

double std_normal_quantile(double u) {
    if (!(u > 0.0 && u < 1.0)) throw DistributionError("normal quantile needs u in (0, 1)");
    return boost::math::quantile(kStdNormal, u);
}

void TruncatedWeibull::validate() const {
    if (!(a > 0.0) || !(b > 0.0)) throw DistributionError("Weibull scale and shape must be positive");
    if (!(lower < upper)) throw DistributionError("Weibull truncation needs lower < upper");
    if (!(weibull_sf(lower, a, b) > weibull_sf(upper, a, b)))
        throw DistributionError("degenerate Weibull truncation: no mass between bounds");
}

double TruncatedWeibull::cdf(double x) const {
    validate();
    if (x <= lower) return 0.0;
    if (x >= upper) return 1.0;
    const double sl = weibull_sf(lower, a, b);
    const double su = weibull_sf(upper, a, b);
    return std::clamp((sl - weibull_sf(x, a, b)) / (sl - su), 0.0, 1.0);
}

double TruncatedWeibull::pdf(double x) const {
    validate();
    if (x < lower || x > upper || x <= 0.0) return 0.0;
    const double sl = weibull_sf(lower, a, b);
    const double su = weibull_sf(upper, a, b);
    const double z = x / a;
    return (b / a) * std::pow(z, b - 1.0) * std::exp(-std::pow(z, b)) / (sl - su);
}

double TruncatedWeibull::quantile(double u) const {
    validate();
    if (u <= 0.0) return lower;
    if (u >= 1.0) return upper;
    const double sl = weibull_sf(lower, a, b);
    const double su = weibull_sf(upper, a, b);
    const double s = sl - u * (sl - su);
    return std::clamp(a * std::pow(-std::log(s), 1.0 / b), lower, upper);
}

void LognormalMarginal::validate() const {
    if (!(zeta > 0.0) || !std::isfinite(lambda)) throw DistributionError("lognormal needs zeta > 0");
}

double LognormalMarginal::cdf(double x) const {
    validate();
    if (x <= 0.0) return 0.0;
    if (std::isinf(x)) return 1.0;
    return std_normal_cdf((std::log(x) - lambda) / zeta);
}

double LognormalMarginal::pdf(double x) const {
    validate();
    if (x <= 0.0) return 0.0;
    const double z = (std::log(x) - lambda) / zeta;
    return std::exp(-0.5 * z * z) / (x * zeta * std::sqrt(2.0 * M_PI));
}

double LognormalMarginal::quantile(double u) const {
    validate();
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return std::numeric_limits<double>::infinity();
    return std::exp(lambda + zeta * std_normal_quantile(u));
}

double LognormalMarginal::median() const { return std::exp(lambda); }

LognormalMarginal fit_lognormal(std::span<const double> values, std::span<const double> weights) {
    if (values.size() != weights.size()) throw DistributionError("values and weights differ in length");
    double sw = 0.0, sx = 0.0;
    for (std::size_t k = 0; k < values.size(); ++k) {
        if (!(values[k] > 0.0)) throw DistributionError("lognormal fit needs positive values");
        sw += weights[k];
        sx += weights[k] * std::log(values[k]);
    }
    if (!(sw > 0.0)) throw DistributionError("lognormal fit needs positive total weight");
    const double mu = sx / sw;
    double ss = 0.0;
    for (std::size_t k = 0; k < values.size(); ++k) {
        const double d = std::log(values[k]) - mu;
        ss += weights[k] * d * d;
    }
    const double zeta = std::sqrt(ss / sw);
    if (!(zeta > 0.0)) throw DistributionError("lognormal fit is degenerate (zero spread)");
    return LognormalMarginal{mu, zeta};
}

namespace {

struct WeibullFitData {
    std::span<const double> values;
    std::span<const double> weights;
    double lower;
    double upper;
};

double weibull_negloglik(const gsl_vector* p, void* params) {
    const auto& d = *static_cast<const WeibullFitData*>(params);
    const double a = std::exp(gsl_vector_get(p, 0));
    const double b = std::exp(gsl_vector_get(p, 1));
    const double mass = weibull_sf(d.lower, a, b) - weibull_sf(d.upper, a, b);
    if (!(mass > 0.0)) return std::numeric_limits<double>::max();
    double nll = 0.0;
    for (std::size_t k = 0; k < d.values.size(); ++k) {
        const double x = d.values[k];
        if (x < d.lower || x > d.upper || x <= 0.0) continue;
        const double z = x / a;
        const double logf = std::log(b / a) + (b - 1.0) * std::log(z) - std::pow(z, b) - std::log(mass);
        nll -= d.weights[k] * logf;
    }
    return std::isfinite(nll) ? nll : std::numeric_limits<double>::max();
}

}  // namespace

TruncatedWeibull fit_truncated_weibull(std::span<const double> values,
                                       std::span<const double> weights, double lower,
                                       double upper) {
    if (values.size() != weights.size()) throw DistributionError("values and weights differ in length");
    double sw = 0.0, sx = 0.0;
    for (std::size_t k = 0; k < values.size(); ++k)
        if (values[k] >= lower && values[k] <= upper && values[k] > 0.0) {
            sw += weights[k];
            sx += weights[k] * values[k];
        }
    if (!(sw > 0.0)) throw DistributionError("no weighted samples inside the truncation bounds");

    WeibullFitData data{values, weights, lower, upper};
    gsl_multimin_function fn{&weibull_negloglik, 2, &data};
    gsl_vector* start = gsl_vector_alloc(2);
    gsl_vector* step = gsl_vector_alloc(2);
    gsl_vector_set(start, 0, std::log(sx / sw));
    gsl_vector_set(start, 1, 0.0);
    gsl_vector_set_all(step, 0.5);
    gsl_multimin_fminimizer* s = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, 2);
    gsl_multimin_fminimizer_set(s, &fn, start, step);
    int status = GSL_CONTINUE;
    for (int iter = 0; iter < 2000 && status == GSL_CONTINUE; ++iter) {
        if (gsl_multimin_fminimizer_iterate(s)) break;
        status = gsl_multimin_test_size(gsl_multimin_fminimizer_size(s), 1e-10);
    }
    TruncatedWeibull fit{std::exp(gsl_vector_get(s->x, 0)), std::exp(gsl_vector_get(s->x, 1)),
                         lower, upper};
    gsl_multimin_fminimizer_free(s);
    gsl_vector_free(step);
    gsl_vector_free(start);
    fit.validate();
    return fit;
}

}  // namespace jpmbn
