#include <gtest/gtest.h>

#include <cmath>

#include "jpmbn/discretizer.hpp"
#include "support.hpp"

using namespace jpmbn;

namespace {

StudyConfig identity_config() {
    auto cfg = load_config(test_support::source_path("configs/reduced.json"));
    for (auto& c : cfg.classes) c.kendall = Eigen::Matrix4d::Identity();
    return cfg;
}

// Analytic 1-D bin masses with the outer bins absorbing the tails.
std::vector<double> bin_masses(const StormClimatology& clim, std::size_t cls, StormParam p, const std::vector<double>& e) {
    std::vector<double> m;
    const std::size_t n = e.size() - 1;
    for (std::size_t b = 0; b < n; ++b) {
        const double lo = b == 0 ? 0.0 : clim.marginal_cdf(cls, p, e[b]);
        const double hi = b + 1 == n ? 1.0 : clim.marginal_cdf(cls, p, e[b + 1]);
        m.push_back(hi - lo);
    }
    return m;
}

}  // namespace

TEST(BinScheme, RejectsStraddlingClassBoundaries) {
    BinScheme b = load_config(test_support::source_path("configs/reduced.json")).bins;
    b.dp = {8, 20, 30, 48, 148};
    EXPECT_THROW(b.validate(), std::invalid_argument);
}

TEST(BinScheme, LocateFoldsOuterValues) {
    const std::vector<double> e{0, 1, 2, 3};
    EXPECT_EQ(locate_bin(e, -5.0), 0u);
    EXPECT_EQ(locate_bin(e, 0.0), 0u);
    EXPECT_EQ(locate_bin(e, 1.0), 1u);
    EXPECT_EQ(locate_bin(e, 2.999), 2u);
    EXPECT_EQ(locate_bin(e, 3.0), 2u);
    EXPECT_EQ(locate_bin(e, 99.0), 2u);
    EXPECT_EQ(close_edges({5, 10}, 50), (std::vector<double>{5, 10, 50}));
}

TEST(Discretize, TallySumsToOne) {
    const auto cfg = identity_config();
    const auto clim = make_climatology(cfg);
    DiscretizeOptions o;
    o.n_samples = 100000;
    o.seed = 3;
    const auto t = discretize_joint(clim, cfg.bins, 2, o);
    double s = 0.0;
    for (double p : t.prob) s += p;
    EXPECT_NEAR(s, 1.0, 1e-12);
    o.n_samples = 10;
    EXPECT_THROW(discretize_joint(clim, cfg.bins, 2, o), std::invalid_argument);
}

TEST(Discretize, IndependentCellsMatchProductOfMarginals) {
    const auto cfg = identity_config();
    const auto clim = make_climatology(cfg);
    DiscretizeOptions o;
    o.n_samples = 200000;
    o.seed = 17;
    std::size_t cells = 0, outside = 0;
    for (std::size_t cls = 0; cls < kIntensityCount; ++cls) {
        const auto t = discretize_joint(clim, cfg.bins, cls, o);
        std::array<std::vector<double>, kStormParamCount> m;
        for (std::size_t p = 0; p < kStormParamCount; ++p)
            m[p] = bin_masses(clim, cls, static_cast<StormParam>(p), cfg.bins.edges(static_cast<StormParam>(p)));
        const auto s = t.shape;
        for (std::size_t a = 0; a < s[0]; ++a)
            for (std::size_t b = 0; b < s[1]; ++b)
                for (std::size_t c = 0; c < s[2]; ++c)
                    for (std::size_t d = 0; d < s[3]; ++d) {
                        const double p = m[0][a] * m[1][b] * m[2][c] * m[3][d];
                        const double got = t.prob[t.index(a, b, c, d)];
                        if (p == 0.0) {
                            EXPECT_EQ(got, 0.0);
                            continue;
                        }
                        ++cells;
                        const double se = std::sqrt(p * (1 - p) / static_cast<double>(o.n_samples));
                        if (std::abs(got - p) > 3 * se) ++outside;
                        EXPECT_LT(std::abs(got - p), 5 * se);
                    }
    }
    // A correct sampler leaves about 0.27% of cells beyond 3 SE.
    EXPECT_LE(outside, 3u) << outside << " of " << cells;
}

TEST(Discretize, MarginalsMatchAnalyticBinMasses) {
    const auto cfg = load_config(test_support::source_path("configs/reduced.json"));
    const auto clim = make_climatology(cfg);
    DiscretizeOptions o;
    o.n_samples = 200000;
    o.seed = 21;
    for (std::size_t cls = 0; cls < kIntensityCount; ++cls) {
        const auto t = discretize_joint(clim, cfg.bins, cls, o);
        for (std::size_t p = 0; p < kStormParamCount; ++p) {
            const auto sp = static_cast<StormParam>(p);
            const auto expect = bin_masses(clim, cls, sp, cfg.bins.edges(sp));
            const auto got = t.marginal(sp);
            for (std::size_t b = 0; b < expect.size(); ++b) {
                const double se = std::sqrt(expect[b] * (1 - expect[b]) / static_cast<double>(o.n_samples));
                EXPECT_LE(std::abs(got[b] - expect[b]), 3 * se + 1e-15) << cls << " " << p << " " << b;
            }
        }
    }
}

TEST(Discretize, DeterministicAcrossThreadCounts) {
    const auto cfg = load_config(test_support::source_path("configs/reduced.json"));
    const auto clim = make_climatology(cfg);
    DiscretizeOptions o;
    o.n_samples = 100000;
    o.chunk_size = 4096;
    o.threads = 1;
    const auto a = discretize_joint(clim, cfg.bins, 1, o);
    o.threads = 4;
    const auto b = discretize_joint(clim, cfg.bins, 1, o);
    EXPECT_EQ(a.counts, b.counts);
}

TEST(Conditionalize, ChainRuleReassemblesJoint) {
    const auto cfg = load_config(test_support::source_path("configs/reduced.json"));
    const auto clim = make_climatology(cfg);
    DiscretizeOptions o;
    o.n_samples = 100000;
    std::vector<DiscreteJointTable> slices;
    for (std::size_t c = 0; c < kIntensityCount; ++c) slices.push_back(discretize_joint(clim, cfg.bins, c, o));
    const std::array<double, 3> pi{0.5, 0.3, 0.2};
    const auto cpts = conditionalize(pi, slices, 4);
    const auto s = slices[0].shape;
    const auto& pdp = cpts.p_dp.values();
    for (std::size_t a = 0; a < s[0]; ++a)
        for (std::size_t b = 0; b < s[1]; ++b)
            for (std::size_t c = 0; c < s[2]; ++c)
                for (std::size_t d = 0; d < s[3]; ++d) {
                    double joint = 0.0, dp = 0.0;
                    for (std::size_t i = 0; i < 3; ++i) {
                        joint += pi[i] * slices[i].prob[slices[i].index(a, b, c, d)];
                        dp += pi[i] * pdp[i * s[0] + a];
                    }
                    const std::size_t vf[] = {a, b}, rm[] = {a, b, c}, th[] = {a, b, c, d};
                    const double rebuilt = dp * cpts.p_vf.at(vf) * cpts.p_rmax.at(rm) * cpts.p_theta.at(th);
                    EXPECT_NEAR(rebuilt, joint, 1e-12);
                }
    EXPECT_TRUE(validate_network(cpts.to_network(cfg.bins)).empty());
}

TEST(Conditionalize, IndependentJointGivesIdenticalRows) {
    DiscreteJointTable t;
    t.shape = {2, 2, 1, 1};
    t.n_samples = 100;
    t.prob = {0.3 * 0.4, 0.3 * 0.6, 0.7 * 0.4, 0.7 * 0.6};
    t.counts.assign(4, 0);
    const auto cpts = conditionalize({1.0, 0.0, 0.0}, {t, t, t}, 2);
    const auto& v = cpts.p_vf.values();
    EXPECT_NEAR(v[0], v[2], 1e-15);
    EXPECT_NEAR(v[1], v[3], 1e-15);
}

TEST(Conditionalize, ZeroRowsBecomeUniformAndFlagged) {
    DiscreteJointTable t;
    t.shape = {2, 3, 1, 1};
    t.n_samples = 10;
    t.prob = {0.2, 0.3, 0.5, 0.0, 0.0, 0.0};
    t.counts.assign(6, 0);
    const auto cpts = conditionalize({1.0, 0.0, 0.0}, {t, t, t}, 1);
    const auto& v = cpts.p_vf.values();
    for (std::size_t k = 3; k < 6; ++k) EXPECT_NEAR(v[k], 1.0 / 3.0, 1e-15);
    ASSERT_FALSE(cpts.flagged_rows.empty());
    EXPECT_NE(cpts.flagged_rows.front().find("VF|DP row 1"), std::string::npos);
}

TEST(Landfall, CenteredRepresentatives) {
    const auto g = build_landfall();
    ASSERT_EQ(g.longitudes.size(), 14u);
    EXPECT_NEAR(g.longitudes.front(), -92.75, 1e-12);
    EXPECT_NEAR(g.longitudes.back(), -86.25, 1e-12);
    EXPECT_NEAR(g.spacing_deg(), 0.5, 1e-12);
    const Factor prior = landfall_prior(g);
    for (double p : prior.values()) EXPECT_NEAR(p, 1.0 / 14.0, 1e-15);
}

TEST(Landfall, ZeroHeadingTravelsNorth) {
    const auto g = build_landfall();
    const auto t = g.track(3, 0.0);
    EXPECT_NEAR(t.cross_track_km(t.lat0 + 1.0, t.lon0), 0.0, 1e-9);
    EXPECT_GT(t.along_track_km(t.lat0 + 1.0, t.lon0), 0.0);
    // East of a northbound track is to the right of travel.
    EXPECT_GT(t.cross_track_km(t.lat0, t.lon0 + 0.5), 0.0);
}
