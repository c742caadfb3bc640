#include "jpmbn/deagg.hpp"

#include <algorithm>
#include <stdexcept>

namespace jpmbn {

void EvidenceCase::validate() const {
    if (!thresholds[0] && !thresholds[1])
        throw std::invalid_argument("evidence case '" + label + "' has no active threshold");
}

std::vector<EvidenceCase> standard_cases(double surge_threshold, double rain_threshold) {
    return {
        {"EC1", {surge_threshold, std::nullopt}},
        {"EC2", {std::nullopt, rain_threshold}},
        {"EC3", {surge_threshold, rain_threshold}},
    };
}

const std::vector<double>& DeaggregationResult::pmf(StormParam p) const {
    switch (p) {
        case kDp: return pmf_dp;
        case kVf: return pmf_vf;
        case kRmax: return pmf_rmax;
        case kTheta: return pmf_theta;
    }
    throw std::out_of_range("unknown storm parameter");
}

double midpoint_mean(const std::vector<double>& edges, const std::vector<double>& pmf) {
    double m = 0.0;
    for (std::size_t k = 0; k < pmf.size(); ++k) m += pmf[k] * 0.5 * (edges[k] + edges[k + 1]);
    return m;
}

namespace {

// Fills every view from an already normalized posterior.
void derive_views(const TcpcSpace& space, DeaggregationResult& r) {
    const auto& bins = space.bins();
    const auto s = bins.shape();
    const std::size_t nx0 = bins.x0_count;
    r.pmf_dp.assign(s[0], 0.0);
    r.pmf_vf.assign(s[1], 0.0);
    r.pmf_rmax.assign(s[2], 0.0);
    r.pmf_theta.assign(s[3], 0.0);
    r.pmf_x0.assign(nx0, 0.0);
    r.track.assign(nx0 * s[3], 0.0);
    for (std::size_t x = 0; x < r.posterior.size(); ++x) {
        const double p = r.posterior[x];
        if (p == 0.0) continue;
        const auto idx = space.decode(x);
        r.pmf_dp[idx[0]] += p;
        r.pmf_vf[idx[1]] += p;
        r.pmf_rmax[idx[2]] += p;
        r.pmf_theta[idx[3]] += p;
        r.pmf_x0[idx[4]] += p;
        r.track[idx[4] * s[3] + idx[3]] += p;
    }

    // I is independent of the rest given DP: p(i | e) = sum_dp p(i | dp) p(dp | e).
    const auto& cpts = space.cpts();
    const auto& pi = cpts.p_i.values();
    const auto& pdp = cpts.p_dp.values();
    r.pmf_i.assign(pi.size(), 0.0);
    for (std::size_t d = 0; d < s[0]; ++d) {
        double p_d = 0.0;
        for (std::size_t i = 0; i < pi.size(); ++i) p_d += pi[i] * pdp[i * s[0] + d];
        if (p_d == 0.0) continue;
        for (std::size_t i = 0; i < pi.size(); ++i) r.pmf_i[i] += pi[i] * pdp[i * s[0] + d] / p_d * r.pmf_dp[d];
    }

    for (std::size_t k = 0; k < kHazardCount; ++k) {
        if (r.hazard_pmf[k].empty()) r.hazard_pmf[k] = conditional_hazard(space, r.posterior, k);
        r.mean_hazard[k] = midpoint_mean(space.hazard(k).bins.r_edges(), r.hazard_pmf[k]);
    }
    r.mean_dp = midpoint_mean(bins.dp, r.pmf_dp);
    r.mean_vf = midpoint_mean(bins.vf, r.pmf_vf);
    r.mean_rmax = midpoint_mean(bins.rmax, r.pmf_rmax);
    r.mean_theta = midpoint_mean(bins.theta, r.pmf_theta);
}

}  // namespace

DeaggregationResult prior_views(const TcpcSpace& space) {
    DeaggregationResult r;
    r.label = "prior";
    r.posterior = space.prior();
    derive_views(space, r);
    return r;
}

DeaggregationResult deaggregate(const TcpcSpace& space, const EvidenceCase& evidence) {
    evidence.validate();
    DeaggregationResult r;
    r.label = evidence.label;
    std::array<std::vector<double>, kHazardCount> like;
    for (std::size_t k = 0; k < kHazardCount; ++k) {
        if (!evidence.thresholds[k]) continue;
        const auto snapped = snap_threshold(space.hazard(k).bins.r_edges(), *evidence.thresholds[k]);
        r.thresholds[k] = snapped;
        like[k] = space.likelihood(k, snapped.edge);
    }
    // Weights p(x) prod_{j != skip} P(E_j | x); skip = kHazardCount keeps every factor.
    auto weights = [&](std::size_t skip) {
        std::vector<double> w = space.prior();
        for (std::size_t k = 0; k < kHazardCount; ++k)
            if (k != skip && !like[k].empty())
                for (std::size_t x = 0; x < w.size(); ++x) w[x] *= like[k][x];
        return w;
    };
    r.posterior = weights(kHazardCount);
    double total = 0.0;
    for (double p : r.posterior) total += p;
    if (!(total > 0.0))
        throw ZeroEvidenceError("evidence case '" + evidence.label + "' has zero probability");
    r.evidence_probability = total;
    for (double& p : r.posterior) p /= total;

    // An evidenced hazard depends on its own indicator directly, so its PMF is the
    // forward mixture under the other evidence, truncated at its threshold.
    for (std::size_t k = 0; k < kHazardCount; ++k) {
        if (like[k].empty()) continue;
        auto w = weights(k);
        for (double& v : w) v /= total;
        auto pmf = conditional_hazard(space, w, k);
        for (std::size_t b = 0; b < r.thresholds[k]->edge; ++b) pmf[b] = 0.0;
        r.hazard_pmf[k] = std::move(pmf);
    }
    derive_views(space, r);
    return r;
}

std::vector<BinGroup> groups_from_splits(const std::vector<double>& edges, const std::vector<double>& splits,
                                         const std::vector<std::string>& labels) {
    if (labels.size() != splits.size() + 1)
        throw std::invalid_argument("group labels must number one more than the split values");
    if (!std::is_sorted(splits.begin(), splits.end()))
        throw std::invalid_argument("split values must ascend");
    std::vector<BinGroup> groups(labels.size());
    for (std::size_t g = 0; g < labels.size(); ++g) groups[g].label = labels[g];
    for (std::size_t b = 0; b + 1 < edges.size(); ++b) {
        const auto g = static_cast<std::size_t>(std::upper_bound(splits.begin(), splits.end(), edges[b]) -
                                                splits.begin());
        groups[g].bins.push_back(b);
    }
    return groups;
}

std::vector<BinGroup> default_groups(const BinScheme& bins, StormParam param) {
    switch (param) {
        case kDp: {
            const auto& cls = intensity_classes();
            return groups_from_splits(bins.dp, {cls[1].dp_lower, cls[2].dp_lower},
                                      {cls[0].label, cls[1].label, cls[2].label});
        }
        case kVf: return groups_from_splits(bins.vf, {25.0}, {"vf<25", "vf>=25"});
        case kRmax: return groups_from_splits(bins.rmax, {60.0}, {"rmax<60", "rmax>=60"});
        case kTheta: break;
    }
    throw std::invalid_argument("stacking is defined for dp, vf and rmax only");
}

StackedTable stacked_contributions(const DeaggregationResult& result, const TcpcSpace& space,
                                   StormParam param, const std::vector<BinGroup>& groups) {
    if (param == kTheta) throw std::invalid_argument("stacking is defined for dp, vf and rmax only");
    const auto s = space.bins().shape();
    std::vector<std::size_t> group_of(s[param], groups.size());
    for (std::size_t g = 0; g < groups.size(); ++g)
        for (std::size_t b : groups[g].bins) {
            if (b >= s[param]) throw std::invalid_argument("group '" + groups[g].label + "' names a bin out of range");
            if (group_of[b] != groups.size())
                throw std::invalid_argument("bin " + std::to_string(b) + " appears in more than one group");
            group_of[b] = g;
        }
    for (std::size_t b = 0; b < s[param]; ++b)
        if (group_of[b] == groups.size())
            throw std::invalid_argument("partition does not cover bin " + std::to_string(b));

    StackedTable t;
    t.param = param;
    for (const auto& g : groups) t.group_labels.push_back(g.label);
    t.n_x0 = space.bins().x0_count;
    t.n_theta = s[kTheta];
    t.values.assign(t.n_x0 * t.n_theta * groups.size(), 0.0);
    for (std::size_t x = 0; x < result.posterior.size(); ++x) {
        const double p = result.posterior[x];
        if (p == 0.0) continue;
        const auto idx = space.decode(x);
        t.values[(idx[4] * t.n_theta + idx[3]) * groups.size() + group_of[idx[param]]] += p;
    }
    return t;
}

std::vector<double> conditional_hazard(const TcpcSpace& space, const std::vector<double>& posterior,
                                       std::size_t k) {
    const auto& h = space.hazard(k);
    const std::size_t nh = h.bins.rhat_bins, nr = h.bins.r_bins;
    if (posterior.size() != space.size()) throw std::invalid_argument("posterior size does not match the TCPC space");
    // Collapse onto r_hat first, then apply the error kernel once.
    std::vector<double> rhat(nh, 0.0);
    const auto& rv = h.rhat->values();
    for (std::size_t x = 0; x < posterior.size(); ++x) {
        const double p = posterior[x];
        if (p == 0.0) continue;
        for (std::size_t a = 0; a < nh; ++a) rhat[a] += p * rv[x * nh + a];
    }
    const auto& q = space.response_kernel(k);
    std::vector<double> out(nr, 0.0);
    for (std::size_t a = 0; a < nh; ++a)
        for (std::size_t r = 0; r < nr; ++r) out[r] += rhat[a] * q[a * nr + r];
    return out;
}

ThresholdSelection select_threshold(const std::vector<double>& r_edges, const std::vector<double>& pmf,
                                    double target_ep) {
    if (!(target_ep > 0.0 && target_ep <= 1.0)) throw std::invalid_argument("target exceedance must lie in (0, 1]");
    if (pmf.size() + 1 != r_edges.size()) throw std::invalid_argument("PMF size does not match the edges");
    const auto exc = exceedance_at_edges(pmf);
    for (std::size_t e = 0; e < exc.size(); ++e) {
        // Small slack so a target hit exactly is not lost to summation rounding.
        if (exc[e] <= target_ep + 1e-12) {
            if (exc[e] <= 0.0)
                throw std::domain_error("target exceedance unreachable: no mass above the selected edge");
            return {e, r_edges[e], exc[e], e > 0 ? pmf[e - 1] : 0.0};
        }
    }
    throw std::domain_error("target exceedance unreachable");
}

ThresholdSelection select_threshold(const AssembledNetwork& net, std::size_t k, double target_ep) {
    return select_threshold(net.r_edges.at(k), hazard_pmf(net, k), target_ep);
}

}  // namespace jpmbn
