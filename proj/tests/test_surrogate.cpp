#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

#include "jpmbn/surrogate.hpp"
#include "support.hpp"

using namespace jpmbn;

namespace {

class ConstantModel final : public ResponseModel {
public:
    explicit ConstantModel(double c) : c_(c) {}
    std::string hazard() const override { return "constant"; }
    double predict(const StormInput&) const override { return c_; }

private:
    double c_;
};

class LinearDpModel final : public ResponseModel {
public:
    std::string hazard() const override { return "linear"; }
    double predict(const StormInput& x) const override { return x.dp / 10.0; }
};

BinScheme reduced_bins() { return load_config(test_support::source_path("configs/reduced.json")).bins; }

ResponseBinScheme rbins(double lo, double hi, std::size_t nh, double rlo, double rhi, std::size_t nr) {
    ResponseBinScheme b;
    b.rhat_lo = lo;
    b.rhat_hi = hi;
    b.rhat_bins = nh;
    b.r_lo = rlo;
    b.r_hi = rhi;
    b.r_bins = nr;
    return b;
}

ErrorModel constant_sigma(double s) {
    ErrorModel e;
    e.sigma_c = {{0.0, 1.0}, {s, s}};
    return e;
}

double normal_cdf_oracle(double z) { return 0.5 * (1.0 + std::erf(z / std::sqrt(2.0))); }

}  // namespace

TEST(RhatCpt, ConstantModelGivesPointMass) {
    const auto bins = reduced_bins();
    McsConfig cfg;
    cfg.n_sim = 20;
    const auto b = build_rhat_cpt(ConstantModel(3.3), bins, rbins(0, 10, 20, 0, 10, 40), cfg, "RHAT");
    const auto& v = b.cpt.values();
    for (std::size_t row = 0; row < bins.tcpc_count(); ++row)
        for (std::size_t k = 0; k < 20; ++k) EXPECT_EQ(v[row * 20 + k], k == 6 ? 1.0 : 0.0);
    EXPECT_EQ(b.clamped, 0u);
}

TEST(RhatCpt, LinearModelStaysInsideIntervalImage) {
    const auto bins = reduced_bins();
    McsConfig cfg;
    cfg.n_sim = 200;
    const auto rb = rbins(0, 15, 30, 0, 15, 30);
    const auto b = build_rhat_cpt(LinearDpModel(), bins, rb, cfg, "RHAT");
    const auto edges = rb.rhat_edges();
    const auto s = bins.shape();
    const std::size_t per_dp = s[1] * s[2] * s[3] * bins.x0_count;
    const auto& v = b.cpt.values();
    for (std::size_t row = 0; row < bins.tcpc_count(); ++row) {
        const std::size_t d = row / per_dp;
        const double lo = bins.dp[d] / 10.0, hi = bins.dp[d + 1] / 10.0;
        double inside = 0.0;
        for (std::size_t k = 0; k < 30; ++k) {
            const bool overlaps = edges[k + 1] > lo && edges[k] <= hi;
            if (overlaps) inside += v[row * 30 + k];
            else EXPECT_EQ(v[row * 30 + k], 0.0) << row << " " << k;
        }
        EXPECT_NEAR(inside, 1.0, 1e-12);
    }
}

TEST(RhatCpt, QuadrupledSampleCountAgreesWithinBinomialBound) {
    const auto bins = reduced_bins();
    const auto rb = rbins(0, 15, 30, 0, 15, 30);
    McsConfig a;
    a.n_sim = 100;
    McsConfig b = a;
    b.n_sim = 400;
    b.seed = 2;
    const auto ca = build_rhat_cpt(LinearDpModel(), bins, rb, a, "RHAT").cpt.values();
    const auto cb = build_rhat_cpt(LinearDpModel(), bins, rb, b, "RHAT").cpt.values();
    // Each cell is a separate binomial comparison, so a few of several thousand
    // cross the bound by chance; a systematic bias would push many across.
    std::size_t compared = 0, outside = 0;
    for (std::size_t k = 0; k < ca.size(); ++k) {
        if (ca[k] == 0.0 && cb[k] == 0.0) continue;
        const double p = (ca[k] + 4.0 * cb[k]) / 5.0;
        ++compared;
        outside += std::abs(ca[k] - cb[k]) > 2.0 * std::sqrt(p * (1 - p) / 100.0) * 2.0 + 1e-12;
    }
    EXPECT_GT(compared, 1000u);
    EXPECT_LE(static_cast<double>(outside), 0.005 * static_cast<double>(compared)) << outside << " of " << compared;
}

TEST(RhatCpt, IdenticalAcrossThreadCounts) {
    const auto bins = reduced_bins();
    const auto clim_geom = build_landfall({29.5, -93.0, -86.0, 4});
    const auto models = synthetic_models(SyntheticParams{}, clim_geom);
    McsConfig cfg;
    cfg.n_sim = 30;
    cfg.chunk_size = 16;
    cfg.threads = 1;
    const auto rb = rbins(-0.5, 10.5, 20, -1, 14, 40);
    const auto a = build_rhat_cpt(*models.surge, bins, rb, cfg, "RHAT");
    cfg.threads = 3;
    const auto b = build_rhat_cpt(*models.surge, bins, rb, cfg, "RHAT");
    EXPECT_EQ(a.cpt.values(), b.cpt.values());
    EXPECT_EQ(a.clamped, b.clamped);
}

TEST(RCpt, ZeroErrorEmbedsRhatBins) {
    McsConfig cfg;
    cfg.n_sim_error = 4000;
    const auto rb = rbins(0, 10, 10, 0, 10, 20);
    const auto f = build_r_cpt(constant_sigma(0.0), rb, cfg, "RHAT", "EPS", "R").cpt;
    const std::size_t ne = 8;
    const double se = std::sqrt(0.25 / 4000.0);
    for (std::size_t h = 0; h < 10; ++h)
        for (std::size_t e = 0; e < ne; ++e)
            for (std::size_t r = 0; r < 20; ++r) {
                const double v = f.values()[(h * ne + e) * 20 + r];
                if (r / 2 == h) EXPECT_NEAR(v, 0.5, 3 * se);
                else EXPECT_EQ(v, 0.0);
            }
}

TEST(RCpt, TruncatedNormalMatchesIndependentSampler) {
    McsConfig cfg;
    const std::size_t n = 20000;
    cfg.n_sim_error = n;
    cfg.seed = 8;
    const auto rb = rbins(0, 1e-6, 1, 0, 2, 20);
    const auto f = build_r_cpt(constant_sigma(1.0), rb, cfg, "RHAT", "EPS", "R").cpt;
    const std::size_t eps_bin = 4;  // [0, 1)

    // Rejection sampler with its own engine and distribution.
    std::mt19937 rng(12345);
    std::normal_distribution<double> z;
    std::vector<double> ref(20, 0.0);
    for (std::size_t k = 0; k < n;) {
        const double e = z(rng);
        if (e < 0.0 || e >= 1.0) continue;
        ref[std::min<std::size_t>(19, static_cast<std::size_t>(e / 0.1))] += 1.0 / n;
        ++k;
    }
    for (std::size_t r = 0; r < 20; ++r) {
        const double got = f.values()[eps_bin * 20 + r];
        const double p = 0.5 * (got + ref[r]);
        EXPECT_LE(std::abs(got - ref[r]), 3.0 * std::sqrt(p * (1 - p) * 2.0 / n) + 1e-12) << r;
    }
}

TEST(ErrorModel, BinMassesMatchErfOracle) {
    const ErrorModel e;
    const auto m = e.bin_masses();
    double s = 0.0;
    for (double v : m) s += v;
    EXPECT_NEAR(s, 1.0, 1e-15);
    EXPECT_NEAR(m[4], normal_cdf_oracle(1.0) - normal_cdf_oracle(0.0), 1e-12);
    EXPECT_NEAR(m[4], 0.3413, 5e-5);
    for (std::size_t k = 0; k < m.size(); ++k)
        EXPECT_NEAR(m[k], normal_cdf_oracle(e.epsilon_edges[k + 1]) - normal_cdf_oracle(e.epsilon_edges[k]), 1e-12);
}

TEST(ErrorModel, NegativeSigmaNamesField) {
    ErrorModel e;
    e.sigma_c = {{0.0, 1.0}, {0.1, -0.2}};
    try {
        e.validate("sites[0].hazards.surge.sigma_c");
        FAIL() << "expected an error";
    } catch (const std::invalid_argument& ex) {
        EXPECT_NE(std::string(ex.what()).find("sigma_c"), std::string::npos);
    }
}

TEST(SyntheticModels, QualitativePhysics) {
    const auto geom = build_landfall();
    const auto m = synthetic_models(SyntheticParams{}, geom);
    const StormInput centre{78.0, 25.0, 75.0, 0.0, 6};
    auto with = [&](auto f) {
        StormInput x = centre;
        f(x);
        return x;
    };
    const double h = 1e-3;
    EXPECT_GT(m.surge->predict(with([&](StormInput& x) { x.dp += h; })), m.surge->predict(centre));
    EXPECT_GT(m.surge->predict(with([](StormInput& x) { x.vf = 40; })),
              m.surge->predict(with([](StormInput& x) { x.vf = 10; })));
    EXPECT_GT(m.rain->predict(with([](StormInput& x) { x.vf = 10; })),
              m.rain->predict(with([](StormInput& x) { x.vf = 40; })));
    EXPECT_GT(m.rain->predict(with([&](StormInput& x) { x.dp += h; })), m.rain->predict(centre));
    // Surge is unimodal in rmax.
    const double peak = m.surge->predict(with([](StormInput& x) { x.rmax = 45; }));
    EXPECT_GT(peak, m.surge->predict(with([](StormInput& x) { x.rmax = 15; })));
    EXPECT_GT(peak, m.surge->predict(with([](StormInput& x) { x.rmax = 140; })));
}

TEST(SyntheticModels, ReproduceGoldenTable) {
    const auto path = test_support::source_path("tests/golden/synthetic_models.csv");
    const auto geom = build_landfall();
    const auto m = synthetic_models(SyntheticParams{}, geom);
    std::vector<StormInput> inputs;
    for (double dp : {12.0, 38.0, 90.0})
        for (double vf : {8.0, 30.0})
            for (double rmax : {20.0, 60.0})
                for (double theta : {-60.0, 10.0})
                    for (std::size_t x0 : {2u, 7u, 11u}) inputs.push_back({dp, vf, rmax, theta, x0});
    if (std::getenv("JPMBN_REGENERATE_GOLDEN")) {
        std::ofstream out(path);
        out.precision(17);
        out << "dp,vf,rmax,theta,x0,surge,rainfall\n";
        for (const auto& x : inputs)
            out << x.dp << ',' << x.vf << ',' << x.rmax << ',' << x.theta << ',' << x.x0 << ','
                << m.surge->predict(x) << ',' << m.rain->predict(x) << '\n';
    }
    std::ifstream in(path);
    ASSERT_TRUE(in) << path;
    std::string line;
    std::getline(in, line);
    std::size_t k = 0;
    for (; std::getline(in, line); ++k) {
        std::stringstream ss(line);
        std::string c[7];
        for (auto& s : c) std::getline(ss, s, ',');
        ASSERT_LT(k, inputs.size());
        EXPECT_EQ(std::stod(c[0]), inputs[k].dp);
        EXPECT_NEAR(m.surge->predict(inputs[k]), std::stod(c[5]), 1e-12 * std::max(1.0, std::abs(std::stod(c[5]))));
        EXPECT_NEAR(m.rain->predict(inputs[k]), std::stod(c[6]), 1e-12 * std::max(1.0, std::abs(std::stod(c[6]))));
    }
    EXPECT_EQ(k, inputs.size());
}

namespace {

struct Grid {
    std::vector<double> dp{8, 30, 70, 148}, vf{5, 20, 60}, rmax{10, 50, 160};
    std::vector<double> values;
    Grid() {
        std::mt19937_64 rng(6);
        std::uniform_real_distribution<double> u(0.0, 5.0);
        values.resize(dp.size() * vf.size() * rmax.size());
        for (auto& v : values) v = u(rng);
    }
    double at(std::size_t a, std::size_t b, std::size_t c) const {
        return values[(a * vf.size() + b) * rmax.size() + c];
    }
    TabulatedModel model() const { return TabulatedModel("surge", dp, vf, rmax, {{{0.0, 1}, values}}); }
};

// Successive 1-D interpolation along rmax, then vf, then dp.
double nested_interp(const Grid& g, double dp, double vf, double rmax) {
    auto seg = [](const std::vector<double>& k, double v) {
        std::size_t i = 0;
        while (i + 2 < k.size() && v >= k[i + 1]) ++i;
        return std::make_pair(i, (v - k[i]) / (k[i + 1] - k[i]));
    };
    const auto [i, ti] = seg(g.dp, dp);
    const auto [j, tj] = seg(g.vf, vf);
    const auto [k, tk] = seg(g.rmax, rmax);
    double along_vf[2];
    for (int a = 0; a < 2; ++a) {
        double along_r[2];
        for (int b = 0; b < 2; ++b)
            along_r[b] = g.at(i + a, j + b, k) + tk * (g.at(i + a, j + b, k + 1) - g.at(i + a, j + b, k));
        along_vf[a] = along_r[0] + tj * (along_r[1] - along_r[0]);
    }
    return along_vf[0] + ti * (along_vf[1] - along_vf[0]);
}

}  // namespace

TEST(TabulatedModel, ExactAtKnots) {
    const Grid g;
    const auto m = g.model();
    for (std::size_t a = 0; a < g.dp.size(); ++a)
        for (std::size_t b = 0; b < g.vf.size(); ++b)
            for (std::size_t c = 0; c < g.rmax.size(); ++c)
                EXPECT_EQ(m.predict({g.dp[a], g.vf[b], g.rmax[c], 0.0, 1}), g.at(a, b, c));
}

TEST(TabulatedModel, MidpointIsMean) {
    const Grid g;
    const auto m = g.model();
    EXPECT_NEAR(m.predict({19.0, 20.0, 50.0, 0.0, 1}), 0.5 * (g.at(0, 1, 1) + g.at(1, 1, 1)), 1e-14);
}

TEST(TabulatedModel, MatchesNestedLoopOracle) {
    const Grid g;
    const auto m = g.model();
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> dp(8, 148), vf(5, 60), rm(10, 160);
    for (int k = 0; k < 500; ++k) {
        const double a = dp(rng), b = vf(rng), c = rm(rng);
        EXPECT_NEAR(m.predict({a, b, c, 0.0, 1}), nested_interp(g, a, b, c), 1e-12);
    }
}

TEST(TabulatedModel, RejectsOutsideHullAndMissingLevel) {
    const Grid g;
    const auto m = g.model();
    EXPECT_THROW(m.predict({7.0, 20.0, 50.0, 0.0, 1}), ModelError);
    EXPECT_THROW(m.predict({20.0, 20.0, 50.0, 20.0, 1}), ModelError);
    EXPECT_FALSE(m.continuous_heading());
}

TEST(TabulatedModel, ReadsCsvGrid) {
    const Grid g;
    const auto dir = test_support::scratch_dir("tabulated");
    {
        std::ofstream out(dir / "grid.csv");
        out.precision(17);
        out << "dp,vf,rmax,theta,x0,value\n";
        for (std::size_t a = 0; a < g.dp.size(); ++a)
            for (std::size_t b = 0; b < g.vf.size(); ++b)
                for (std::size_t c = 0; c < g.rmax.size(); ++c)
                    out << g.dp[a] << ',' << g.vf[b] << ',' << g.rmax[c] << ",0,1," << g.at(a, b, c) << '\n';
    }
    const auto m = tabulated_model(dir / "grid.csv", "surge");
    EXPECT_NEAR(m.predict({40.0, 33.0, 77.0, 0.0, 1}), nested_interp(g, 40.0, 33.0, 77.0), 1e-12);
    {
        std::ofstream out(dir / "partial.csv");
        out << "dp,vf,rmax,theta,x0,value\n8,5,10,0,1,1\n8,5,20,0,1,1\n8,6,10,0,1,1\n9,5,10,0,1,1\n";
    }
    EXPECT_THROW(tabulated_model(dir / "partial.csv", "surge"), ModelError);
}
