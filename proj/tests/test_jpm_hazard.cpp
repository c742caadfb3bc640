#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "jpmbn/jpm_hazard.hpp"
#include "support.hpp"

using namespace jpmbn;

namespace {

const test_support::ReducedStudy& study() { return test_support::reduced_study(); }
const auto& site0() { return study().products.sites.at(0); }

AssembledNetwork reduced_net(const AssembleOptions& o = {}) {
    return assemble(study().products.cpts, study().products.bins, site0(), o);
}

Evidence tcpc_evidence(const TcpcSpace& space, std::size_t x) {
    const auto idx = space.decode(x);
    return {{node::kDp, idx[0]}, {node::kVf, idx[1]}, {node::kRmax, idx[2]}, {node::kTheta, idx[3]}, {node::kX0, idx[4]}};
}

// Sets every row of a CPT to a point mass on its first state.
Factor point_mass(const Factor& f) {
    auto v = f.values();
    const std::size_t card = f.cardinalities().back();
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = k % card == 0 ? 1.0 : 0.0;
    return Factor(f.scope(), f.cardinalities(), v);
}

}  // namespace

TEST(Assemble, ProducesValidNetwork) {
    AssembleOptions o;
    o.thresholds = {2.0, 40.0};
    o.joint_node = true;
    const auto net = reduced_net(o);
    EXPECT_TRUE(validate_network(net.net).empty());
    for (const auto* id : {"I", "DP", "VF", "RMAX", "THETA", "X0", "RHAT1", "RHAT2", "EPS1", "EPS2", "R1", "R2",
                           "E1", "E2", "J"})
        EXPECT_TRUE(net.net.has(id)) << id;
}

TEST(Assemble, DpMarginalIsClassMixture) {
    const auto net = reduced_net();
    const auto dp = query(net.net, {node::kDp}).posterior.values();
    const auto& cpts = study().products.cpts;
    const std::size_t nd = dp.size();
    for (std::size_t d = 0; d < nd; ++d) {
        double expect = 0.0;
        for (std::size_t i = 0; i < kIntensityCount; ++i)
            expect += cpts.p_i.values()[i] * cpts.p_dp.values()[i * nd + d];
        EXPECT_NEAR(dp[d], expect, 1e-14);
    }
}

TEST(Assemble, EvidenceNodeEqualsTailSum) {
    const auto plain = reduced_net();
    const auto pmf = hazard_pmf(plain, 0);
    const auto edges = plain.r_edges[0];
    AssembleOptions o;
    o.thresholds = {edges[9], std::nullopt};
    const auto net = reduced_net(o);
    EXPECT_TRUE(net.reports.empty());
    const double p_true = query(net.net, {evidence_node(0)}).posterior.values()[1];
    double tail = 0.0;
    for (std::size_t b = 9; b < pmf.size(); ++b) tail += pmf[b];
    EXPECT_NEAR(p_true, tail, 1e-13);
}

TEST(Assemble, OffEdgeThresholdIsSnappedAndReported) {
    const auto edges = reduced_net().r_edges[1];
    AssembleOptions o;
    o.thresholds = {std::nullopt, edges[5] + 0.3 * (edges[6] - edges[5])};
    const auto net = reduced_net(o);
    ASSERT_EQ(net.reports.size(), 1u);
    EXPECT_NE(net.reports[0].find("snapped"), std::string::npos);
    EXPECT_EQ(net.thresholds[1]->edge, 5u);
    EXPECT_FALSE(snap_threshold(edges, edges[7]).snapped);
}

TEST(HazardCurve, EndpointsAndRate) {
    const auto net = reduced_net();
    const RateConfig rate{0.002, 48.3};
    for (std::size_t k = 0; k < kHazardCount; ++k) {
        const auto c = hazard_curve(net, k, rate);
        EXPECT_NEAR(c.exceedance.front(), 1.0, 1e-12);
        EXPECT_EQ(c.exceedance.back(), 0.0);
        EXPECT_NEAR(c.annual_rate.front(), rate.scale(), 1e-14);
        for (std::size_t e = 1; e < c.exceedance.size(); ++e) EXPECT_LE(c.exceedance[e], c.exceedance[e - 1]);
    }
}

TEST(HazardCurve, MatchesDirectSumAtEveryEdge) {
    const auto net = reduced_net();
    const RateConfig rate{0.002, 48.3};
    const auto& p = study().products;
    for (std::size_t k = 0; k < kHazardCount; ++k) {
        const auto bn = hazard_curve(net, k, rate);
        const auto direct = direct_jpm_curve(p.cpts, p.bins, site0()[k], rate);
        ASSERT_EQ(bn.thresholds.size(), direct.thresholds.size());
        for (std::size_t e = 0; e < bn.thresholds.size(); ++e) {
            EXPECT_NEAR(bn.annual_rate[e], direct.annual_rate[e], 1e-9);
            if (e % 7 == 0)
                EXPECT_NEAR(direct_jpm_sum(p.cpts, p.bins, site0()[k], rate, bn.thresholds[e]), bn.annual_rate[e], 1e-9);
        }
    }
}

TEST(DirectSum, SingleTcpcReducesToErrorMixture) {
    const auto& p = study().products;
    CPTSet cpts = p.cpts;
    cpts.p_i = Factor(cpts.p_i.scope(), cpts.p_i.cardinalities(), {1.0, 0.0, 0.0});
    cpts.p_dp = point_mass(cpts.p_dp);
    cpts.p_vf = point_mass(cpts.p_vf);
    cpts.p_rmax = point_mass(cpts.p_rmax);
    cpts.p_theta = point_mass(cpts.p_theta);
    cpts.p_x0 = point_mass(cpts.p_x0);
    const auto& h = site0()[0];
    const std::size_t nh = h.bins.rhat_bins, ne = h.eps_masses.size(), nr = h.bins.r_bins;
    const auto edges = h.bins.r_edges();
    const RateConfig rate{1.0, 1.0};
    for (std::size_t edge : {0u, 5u, 12u, 25u}) {
        double expect = 0.0;
        for (std::size_t a = 0; a < nh; ++a)
            for (std::size_t j = 0; j < ne; ++j)
                for (std::size_t r = edge; r < nr; ++r)
                    expect += h.rhat->values()[a] * h.eps_masses[j] * h.r->values()[(a * ne + j) * nr + r];
        EXPECT_NEAR(direct_jpm_sum(cpts, p.bins, h, rate, edges[edge]), expect, 1e-14);
    }
}

TEST(DirectSum, DoublingLambdaDoublesRate) {
    const auto& p = study().products;
    const double r = site0()[1].bins.r_edges()[6];
    const double a = direct_jpm_sum(p.cpts, p.bins, site0()[1], {0.002, 48.3}, r);
    const double b = direct_jpm_sum(p.cpts, p.bins, site0()[1], {0.004, 48.3}, r);
    EXPECT_DOUBLE_EQ(b, 2.0 * a);
}

TEST(JointHazard, TableInvariants) {
    const auto& p = study().products;
    const TcpcSpace space(p.cpts, p.bins, site0());
    const auto t = joint_hazard(space);
    const std::size_t n1 = t.n1(), n2 = t.n2(), w = n2 + 1;
    EXPECT_NEAR(t.exceedance[0], 1.0, 1e-12);
    EXPECT_EQ(t.exceedance[n1 * w + n2], 0.0);
    EXPECT_NEAR(t.pdf_volume(), 1.0, 1e-9);
    const auto net = reduced_net();
    const auto e1 = exceedance_at_edges(hazard_pmf(net, 0)), e2 = exceedance_at_edges(hazard_pmf(net, 1));
    for (std::size_t a = 0; a <= n1; ++a)
        for (std::size_t b = 0; b <= n2; ++b) {
            const double v = t.exceedance[a * w + b];
            EXPECT_LE(v, std::min(e1[a], e2[b]) + 1e-12);
            if (a > 0) EXPECT_LE(v, t.exceedance[(a - 1) * w + b] + 1e-15);
            if (b > 0) EXPECT_LE(v, t.exceedance[a * w + b - 1] + 1e-15);
        }
    for (std::size_t a = 0; a <= n1; ++a) EXPECT_NEAR(t.exceedance[a * w], e1[a], 1e-12);
    for (std::size_t b = 0; b <= n2; ++b) EXPECT_NEAR(t.exceedance[b], e2[b], 1e-12);
}

TEST(JointHazard, CorrelationMatchesBruteForce) {
    const auto& p = study().products;
    const auto t = joint_hazard(TcpcSpace(p.cpts, p.bins, site0()));
    double m1 = 0, m2 = 0;
    for (std::size_t a = 0; a < t.n1(); ++a)
        for (std::size_t b = 0; b < t.n2(); ++b) {
            const double q = t.pmf[a * t.n2() + b];
            m1 += q * 0.5 * (t.r1_edges[a] + t.r1_edges[a + 1]);
            m2 += q * 0.5 * (t.r2_edges[b] + t.r2_edges[b + 1]);
        }
    double c = 0, v1 = 0, v2 = 0;
    for (std::size_t a = 0; a < t.n1(); ++a)
        for (std::size_t b = 0; b < t.n2(); ++b) {
            const double q = t.pmf[a * t.n2() + b];
            const double d1 = 0.5 * (t.r1_edges[a] + t.r1_edges[a + 1]) - m1;
            const double d2 = 0.5 * (t.r2_edges[b] + t.r2_edges[b + 1]) - m2;
            c += q * d1 * d2;
            v1 += q * d1 * d1;
            v2 += q * d2 * d2;
        }
    EXPECT_NEAR(t.correlation, c / std::sqrt(v1 * v2), 1e-12);
    EXPECT_GT(t.correlation, 0.0);
}

TEST(JointHazard, JointNodeMatchesEnumeration) {
    const auto& p = study().products;
    AssembleOptions o;
    o.joint_node = true;
    const auto bn = joint_hazard(reduced_net(o));
    const auto en = joint_hazard(TcpcSpace(p.cpts, p.bins, site0()));
    ASSERT_EQ(bn.pmf.size(), en.pmf.size());
    for (std::size_t k = 0; k < bn.pmf.size(); ++k) EXPECT_NEAR(bn.pmf[k], en.pmf[k], 1e-12);
}

TEST(JointHazard, ConditionallyIndependentGivenTcpc) {
    const auto& p = study().products;
    const TcpcSpace space(p.cpts, p.bins, site0());
    const auto net = reduced_net();
    for (std::size_t x : {0u, 37u, 211u, 575u}) {
        if (space.prior()[x] == 0.0) continue;
        const auto e = tcpc_evidence(space, x);
        const auto joint = query(net.net, {r_node(0), r_node(1)}, e).posterior;
        const auto r1 = query(net.net, {r_node(0)}, e).posterior.values();
        const auto r2 = query(net.net, {r_node(1)}, e).posterior.values();
        std::vector<double> s1(r1.size()), s2(r2.size());
        space.response_given(0, x, s1);
        space.response_given(1, x, s2);
        for (std::size_t a = 0; a < r1.size(); ++a) {
            EXPECT_NEAR(s1[a], r1[a], 1e-12);
            for (std::size_t b = 0; b < r2.size(); ++b) {
                const std::size_t i[] = {a, b};
                EXPECT_NEAR(joint.at(i), r1[a] * r2[b], 1e-12);
            }
        }
    }
}

TEST(Rate, Validation) {
    EXPECT_THROW((RateConfig{-1.0, 1.0}.validate()), std::invalid_argument);
    EXPECT_THROW((RateConfig{1.0, 0.0}.validate()), std::invalid_argument);
}
