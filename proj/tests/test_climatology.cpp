#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "jpmbn/climatology.hpp"
#include "support.hpp"

using namespace jpmbn;

namespace {

std::array<ClassModel, kIntensityCount> table2_classes() {
    std::array<ClassModel, kIntensityCount> c;
    const double vf[3][2] = {{2.848, 0.4857}, {2.970, 0.3518}, {3.006, 0.5465}};
    const double rm[3][2] = {{4.307, 0.4170}, {4.097, 0.3597}, {4.009, 0.4276}};
    for (std::size_t i = 0; i < kIntensityCount; ++i) {
        const auto& cls = intensity_classes()[i];
        c[i].dp = {25.79, 1.197, cls.dp_lower, cls.dp_upper};
        c[i].vf = {vf[i][0], vf[i][1]};
        c[i].rmax = {rm[i][0], rm[i][1]};
    }
    return c;
}

TrackRow row(const std::string& id, double lat, double lon, double dp) {
    return {id, "t", lat, lon, dp, 20.0, 40.0, 10.0};
}

}  // namespace

TEST(Climatology, IntensityClasses) {
    EXPECT_EQ(intensity_of(8.0), 0u);
    EXPECT_EQ(intensity_of(27.999), 0u);
    EXPECT_EQ(intensity_of(28.0), 1u);
    EXPECT_EQ(intensity_of(48.0), 2u);
    EXPECT_EQ(intensity_of(148.0), 2u);
    EXPECT_THROW(intensity_of(7.0), std::out_of_range);
}

TEST(Climatology, MarginalsPassKolmogorovSmirnov) {
    const StormClimatology clim(table2_classes(), DirectionalModel{{{-20.0, 1.0}, {30.0, 2.0}}, 4.0, 200.0});
    const std::size_t n = 100000;
    const double critical = 1.628 / std::sqrt(static_cast<double>(n));  // alpha = 0.01
    for (std::size_t cls = 0; cls < kIntensityCount; ++cls) {
        const auto draws = sample_joint(clim, cls, n, 99, cls);
        for (std::size_t p = 0; p < kStormParamCount; ++p) {
            std::vector<double> v(n);
            for (std::size_t k = 0; k < n; ++k) {
                const auto& d = draws[k];
                v[k] = p == kDp ? d.dp : p == kVf ? d.vf : p == kRmax ? d.rmax : d.theta;
            }
            std::sort(v.begin(), v.end());
            double dmax = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                const double f = clim.marginal_cdf(cls, static_cast<StormParam>(p), v[k]);
                dmax = std::max({dmax, std::abs(f - static_cast<double>(k + 1) / n),
                                 std::abs(f - static_cast<double>(k) / n)});
            }
            EXPECT_LT(dmax, critical) << "class " << cls << " param " << p;
        }
    }
}

TEST(Climatology, SamplingIsDeterministic) {
    const StormClimatology clim(table2_classes(), DirectionalModel{{{0.0, 1.0}}, 4.0, 200.0});
    const auto a = sample_joint(clim, 1, 1000, 5, 2);
    const auto b = sample_joint(clim, 1, 1000, 5, 2);
    const auto c = sample_joint(clim, 1, 1000, 6, 2);
    EXPECT_EQ(a.back().dp, b.back().dp);
    EXPECT_NE(a.back().dp, c.back().dp);
}

TEST(Climatology, WeibullClassPriorSumsToOne) {
    const StormClimatology clim(table2_classes(), DirectionalModel{{{0.0, 1.0}}, 4.0, 200.0});
    const auto p = clim.weibull_class_prior();
    EXPECT_NEAR(p[0] + p[1] + p[2], 1.0, 1e-15);
    EXPECT_GT(p[0], p[1]);
    EXPECT_GT(p[1], p[2]);
}

TEST(Ingest, OutsideZoneIsSkipped) {
    const StudyRegion region;
    const auto r = ingest_samples({row("far", 10.0, -60.0, 40.0)}, region, 200.0);
    EXPECT_TRUE(r.samples.empty());
    ASSERT_EQ(r.skipped_storms.size(), 1u);
    EXPECT_EQ(r.skipped_storms[0], "far");
}

TEST(Ingest, SinglePointWeight) {
    const StudyRegion region;
    const auto r = ingest_samples({row("s", 30.5, -89.0, 40.0)}, region, 200.0);
    ASSERT_EQ(r.samples.size(), 1u);
    const double d = great_circle_km(region.crl_lat, region.crl_lon, 30.5, -89.0);
    EXPECT_NEAR(r.samples[0].weight, std::exp(-0.5 * (d / 200.0) * (d / 200.0)), 1e-15);
}

TEST(Ingest, SelectsMaximumPressureDeficit) {
    const StudyRegion region;
    const auto r = ingest_samples({row("s", 29.0, -89.0, 20.0), row("s", 29.5, -89.5, 50.0),
                                   row("s", 30.0, -90.0, 30.0)},
                                  region, 200.0);
    ASSERT_EQ(r.samples.size(), 1u);
    EXPECT_EQ(r.samples[0].dp, 50.0);
}

TEST(Ingest, GreatCircleDistance) {
    // One degree of latitude on the mean-radius sphere.
    EXPECT_NEAR(great_circle_km(0.0, 0.0, 1.0, 0.0), 6371.0 * M_PI / 180.0, 1e-9);
}

TEST(IntensityPrior, WeightedFractions) {
    auto s = [](double dp, double w) { return StormSample{"x", dp, 20, 40, 0, 0, w}; };
    auto p = intensity_prior({s(10, 1), s(30, 1), s(60, 1)});
    for (double v : p) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
    p = intensity_prior({s(10, 1), s(12, 3)});
    EXPECT_EQ(p[0], 1.0);
    p = intensity_prior({s(10, 1), s(30, 2), s(60, 1)});
    EXPECT_NEAR(p[0], 0.25, 1e-15);
    EXPECT_NEAR(p[1], 0.5, 1e-15);
    EXPECT_NEAR(p[2], 0.25, 1e-15);
    EXPECT_THROW(intensity_prior({s(10, 0)}), std::invalid_argument);
    EXPECT_THROW(intensity_prior({}), std::invalid_argument);
}

TEST(Ingest, ReadsShippedTrackFile) {
    const auto rows = read_track_csv(test_support::source_path("data/synthetic_tracks.csv"));
    EXPECT_EQ(rows.size(), 5200u);
    const auto r = ingest_samples(rows, StudyRegion{}, 200.0);
    EXPECT_EQ(r.samples.size() + r.skipped_storms.size(), 400u);
    EXPECT_GT(r.samples.size(), 100u);
}
