#include "jpmbn/jpm_hazard.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "jpmbn/parallel.hpp"

namespace jpmbn {

std::string rhat_node(std::size_t k) { return "RHAT" + std::to_string(k + 1); }
std::string eps_node(std::size_t k) { return "EPS" + std::to_string(k + 1); }
std::string r_node(std::size_t k) { return "R" + std::to_string(k + 1); }
std::string evidence_node(std::size_t k) { return "E" + std::to_string(k + 1); }

void RateConfig::validate() const {
    if (!(lambda > 0.0) || !(s_trk > 0.0))
        throw std::invalid_argument("recurrence rate and track spacing must be positive");
}

SnappedThreshold snap_threshold(const std::vector<double>& r_edges, double r_star) {
    std::size_t best = 0;
    for (std::size_t e = 1; e < r_edges.size(); ++e)
        if (std::abs(r_edges[e] - r_star) < std::abs(r_edges[best] - r_star)) best = e;
    // Treat values within rounding noise of an edge as aligned.
    const double tol = 1e-9 * std::max(1.0, std::abs(r_edges[best]));
    return SnappedThreshold{best, r_edges[best], std::abs(r_edges[best] - r_star) > tol};
}

namespace {

void check_hazard_shapes(const BinScheme& bins, const HazardCpts& h, std::size_t k) {
    const auto shape = bins.shape();
    const std::vector<std::size_t> rhat_cards{shape[0], shape[1], shape[2], shape[3], bins.x0_count,
                                              h.bins.rhat_bins};
    if (!h.rhat || h.rhat->cardinalities() != rhat_cards)
        throw std::invalid_argument("r_hat CPT of hazard " + std::to_string(k + 1) +
                                    " does not match the bin scheme");
    const std::vector<std::size_t> r_cards{h.bins.rhat_bins, h.eps_masses.size(), h.bins.r_bins};
    if (!h.r || h.r->cardinalities() != r_cards)
        throw std::invalid_argument("r CPT of hazard " + std::to_string(k + 1) +
                                    " does not match its response bins");
}

}  // namespace

AssembledNetwork assemble(const CPTSet& cpts, const BinScheme& bins,
                          const std::array<HazardCpts, kHazardCount>& hazards,
                          const AssembleOptions& options) {
    AssembledNetwork out;
    out.net = cpts.to_network(bins);
    const std::vector<std::string> tcpc_parents{node::kDp, node::kVf, node::kRmax, node::kTheta, node::kX0};

    for (std::size_t k = 0; k < kHazardCount; ++k) {
        const auto& h = hazards[k];
        check_hazard_shapes(bins, h, k);
        out.r_edges[k] = h.bins.r_edges();

        std::vector<std::string> eps_labels;
        for (std::size_t j = 0; j < h.eps_masses.size(); ++j) eps_labels.push_back("eps_" + std::to_string(j));

        // Re-label factor scopes with this hazard's node ids.
        auto rhat_cpt = h.rhat;
        if (h.rhat->scope().back() != rhat_node(k)) {
            auto scope = h.rhat->scope();
            scope.back() = rhat_node(k);
            rhat_cpt = std::make_shared<const Factor>(std::move(scope), h.rhat->cardinalities(), h.rhat->values());
        }
        auto r_cpt = h.r;
        if (h.r->scope() != std::vector<std::string>{rhat_node(k), eps_node(k), r_node(k)})
            r_cpt = std::make_shared<const Factor>(
                std::vector<std::string>{rhat_node(k), eps_node(k), r_node(k)}, h.r->cardinalities(),
                h.r->values());

        out.net.add_node({rhat_node(k), bin_labels(h.bins.rhat_edges())}, tcpc_parents, rhat_cpt);
        out.net.add_node({eps_node(k), eps_labels}, {},
                         Factor({eps_node(k)}, {h.eps_masses.size()}, h.eps_masses));
        out.net.add_node({r_node(k), bin_labels(out.r_edges[k])}, {rhat_node(k), eps_node(k)}, r_cpt);
    }

    for (std::size_t k = 0; k < kHazardCount; ++k) {
        if (!options.thresholds[k]) continue;
        const auto snapped = snap_threshold(out.r_edges[k], *options.thresholds[k]);
        if (snapped.snapped) {
            std::ostringstream msg;
            msg << r_node(k) << " threshold " << *options.thresholds[k] << " snapped to bin edge "
                << snapped.value;
            out.reports.push_back(msg.str());
        }
        out.thresholds[k] = snapped;
        const std::size_t nr = out.r_edges[k].size() - 1;
        std::vector<double> cpt(nr * 2);
        for (std::size_t b = 0; b < nr; ++b) {
            const bool exceeds = b >= snapped.edge;
            cpt[b * 2 + 0] = exceeds ? 0.0 : 1.0;
            cpt[b * 2 + 1] = exceeds ? 1.0 : 0.0;
        }
        out.net.add_node({evidence_node(k), {"false", "true"}}, {r_node(k)},
                         Factor({r_node(k), evidence_node(k)}, {nr, 2}, std::move(cpt)));
    }

    if (options.joint_node) {
        const std::size_t n1 = out.r_edges[0].size() - 1, n2 = out.r_edges[1].size() - 1;
        const std::size_t nj = n1 * n2;
        std::vector<double> cpt(n1 * n2 * nj, 0.0);
        for (std::size_t a = 0; a < n1; ++a)
            for (std::size_t b = 0; b < n2; ++b) cpt[(a * n2 + b) * nj + (a * n2 + b)] = 1.0;
        std::vector<std::string> labels;
        for (std::size_t a = 0; a < n1; ++a)
            for (std::size_t b = 0; b < n2; ++b) labels.push_back(std::to_string(a) + "_" + std::to_string(b));
        out.net.add_node({kJointNode, labels}, {r_node(0), r_node(1)},
                         Factor({r_node(0), r_node(1), kJointNode}, {n1, n2, nj}, std::move(cpt)));
    }
    return out;
}

std::vector<double> exceedance_at_edges(const std::vector<double>& pmf) {
    std::vector<double> out(pmf.size() + 1, 0.0);
    for (std::size_t k = pmf.size(); k-- > 0;) out[k] = out[k + 1] + pmf[k];
    return out;
}

std::vector<double> hazard_pmf(const AssembledNetwork& net, std::size_t hazard) {
    return query(net.net, {r_node(hazard)}).posterior.values();
}

HazardCurve hazard_curve(const AssembledNetwork& net, std::size_t hazard, const RateConfig& rate) {
    rate.validate();
    HazardCurve c;
    c.thresholds = net.r_edges.at(hazard);
    c.exceedance = exceedance_at_edges(hazard_pmf(net, hazard));
    for (double e : c.exceedance) c.annual_rate.push_back(rate.scale() * e);
    return c;
}

namespace {

// p(dp, vf, rmax, theta) by the chain rule over the parameter CPTs, summing out I.
std::vector<double> parameter_joint(const CPTSet& cpts, const BinScheme& bins) {
    const auto s = bins.shape();
    const auto& pi = cpts.p_i.values();
    const auto& pdp = cpts.p_dp.values();
    std::vector<double> p_dp(s[0], 0.0);
    for (std::size_t i = 0; i < pi.size(); ++i)
        for (std::size_t d = 0; d < s[0]; ++d) p_dp[d] += pi[i] * pdp[i * s[0] + d];
    std::vector<double> out(bins.parameter_cells());
    std::size_t cell = 0;
    for (std::size_t d = 0; d < s[0]; ++d)
        for (std::size_t v = 0; v < s[1]; ++v)
            for (std::size_t r = 0; r < s[2]; ++r)
                for (std::size_t t = 0; t < s[3]; ++t, ++cell)
                    out[cell] = p_dp[d] * cpts.p_vf.values()[d * s[1] + v] *
                                cpts.p_rmax.values()[(d * s[1] + v) * s[2] + r] *
                                cpts.p_theta.values()[((d * s[1] + v) * s[2] + r) * s[3] + t];
    return out;
}

}  // namespace

double direct_jpm_sum(const CPTSet& cpts, const BinScheme& bins, const HazardCpts& hazard,
                      const RateConfig& rate, double r_star) {
    rate.validate();
    check_hazard_shapes(bins, hazard, 0);
    const auto edges = hazard.bins.r_edges();
    const auto threshold = snap_threshold(edges, r_star);
    const std::size_t nh = hazard.bins.rhat_bins, ne = hazard.eps_masses.size(), nr = hazard.bins.r_bins;
    const auto& rv = hazard.r->values();

    // P[r_hat + eps_j > r* | r_hat bin h] from the r CPT.
    std::vector<double> exceed(nh * ne, 0.0);
    for (std::size_t h = 0; h < nh; ++h)
        for (std::size_t j = 0; j < ne; ++j)
            for (std::size_t r = threshold.edge; r < nr; ++r) exceed[h * ne + j] += rv[(h * ne + j) * nr + r];

    const auto pjoint = parameter_joint(cpts, bins);
    const auto& px0 = cpts.p_x0.values();
    const auto& rh = hazard.rhat->values();
    const std::size_t nx0 = bins.x0_count;
    double total = 0.0;
    for (std::size_t j = 0; j < ne; ++j) {
        double over_x = 0.0;
        for (std::size_t cell = 0; cell < pjoint.size(); ++cell)
            for (std::size_t x0 = 0; x0 < nx0; ++x0) {
                const std::size_t x = cell * nx0 + x0;
                double p_exceed = 0.0;
                for (std::size_t h = 0; h < nh; ++h) p_exceed += rh[x * nh + h] * exceed[h * ne + j];
                over_x += p_exceed * pjoint[cell] * px0[x0];
            }
        total += over_x * hazard.eps_masses[j];
    }
    return rate.scale() * total;
}

HazardCurve direct_jpm_curve(const CPTSet& cpts, const BinScheme& bins, const HazardCpts& hazard,
                             const RateConfig& rate, std::size_t threads) {
    rate.validate();
    check_hazard_shapes(bins, hazard, 0);
    const auto edges = hazard.bins.r_edges();
    const std::size_t nh = hazard.bins.rhat_bins, ne = hazard.eps_masses.size(), nr = hazard.bins.r_bins;
    const std::size_t n_edges = nr + 1;
    const auto& rv = hazard.r->values();

    // G[h][e] = sum_j p(eps_j) P[r_hat + eps_j > edge_e | h].
    std::vector<double> g(nh * n_edges, 0.0);
    for (std::size_t h = 0; h < nh; ++h)
        for (std::size_t j = 0; j < ne; ++j) {
            double tail = 0.0;
            for (std::size_t e = nr; e-- > 0;) {
                tail += rv[(h * ne + j) * nr + e];
                g[h * n_edges + e] += hazard.eps_masses[j] * tail;
            }
        }

    const auto pjoint = parameter_joint(cpts, bins);
    const auto& px0 = cpts.p_x0.values();
    const auto& rh = hazard.rhat->values();
    const std::size_t nx0 = bins.x0_count;
    constexpr std::size_t kCellsPerChunk = 64;
    const std::size_t n_chunks = (pjoint.size() + kCellsPerChunk - 1) / kCellsPerChunk;
    std::vector<std::vector<double>> partial(n_chunks);
    parallel_chunks(n_chunks, threads, [&](std::size_t chunk) {
        std::vector<double> acc(n_edges, 0.0);
        std::vector<double> rhat_mass(nh);
        const std::size_t end = std::min(pjoint.size(), (chunk + 1) * kCellsPerChunk);
        for (std::size_t cell = chunk * kCellsPerChunk; cell < end; ++cell) {
            if (pjoint[cell] == 0.0) continue;
            std::fill(rhat_mass.begin(), rhat_mass.end(), 0.0);
            for (std::size_t x0 = 0; x0 < nx0; ++x0) {
                const double px = pjoint[cell] * px0[x0];
                const double* row = rh.data() + (cell * nx0 + x0) * nh;
                for (std::size_t h = 0; h < nh; ++h) rhat_mass[h] += px * row[h];
            }
            for (std::size_t h = 0; h < nh; ++h) {
                if (rhat_mass[h] == 0.0) continue;
                const double* gh = g.data() + h * n_edges;
                for (std::size_t e = 0; e < n_edges; ++e) acc[e] += rhat_mass[h] * gh[e];
            }
        }
        partial[chunk] = std::move(acc);
    });

    HazardCurve c;
    c.thresholds = edges;
    c.exceedance.assign(n_edges, 0.0);
    for (const auto& p : partial)
        for (std::size_t e = 0; e < n_edges; ++e) c.exceedance[e] += p[e];
    for (double e : c.exceedance) c.annual_rate.push_back(rate.scale() * e);
    return c;
}

TcpcSpace::TcpcSpace(const CPTSet& cpts, const BinScheme& bins,
                     std::array<HazardCpts, kHazardCount> hazards, std::size_t threads)
    : cpts_(cpts), bins_(bins), hazards_(std::move(hazards)), threads_(threads) {
    for (std::size_t k = 0; k < kHazardCount; ++k) check_hazard_shapes(bins_, hazards_[k], k);

    const auto pjoint = parameter_joint(cpts_, bins_);
    const auto& px0 = cpts_.p_x0.values();
    const std::size_t nx0 = bins_.x0_count;
    prior_.resize(pjoint.size() * nx0);
    for (std::size_t cell = 0; cell < pjoint.size(); ++cell)
        for (std::size_t x0 = 0; x0 < nx0; ++x0) prior_[cell * nx0 + x0] = pjoint[cell] * px0[x0];

    for (std::size_t k = 0; k < kHazardCount; ++k) {
        const auto& h = hazards_[k];
        const std::size_t nh = h.bins.rhat_bins, ne = h.eps_masses.size(), nr = h.bins.r_bins;
        auto& q = kernel_[k];
        q.assign(nh * nr, 0.0);
        const auto& rv = h.r->values();
        for (std::size_t a = 0; a < nh; ++a)
            for (std::size_t j = 0; j < ne; ++j)
                for (std::size_t r = 0; r < nr; ++r) q[a * nr + r] += h.eps_masses[j] * rv[(a * ne + j) * nr + r];
    }
}

std::array<std::size_t, 5> TcpcSpace::decode(std::size_t x) const {
    const auto s = bins_.shape();
    std::array<std::size_t, 5> idx{};
    idx[4] = x % bins_.x0_count;
    x /= bins_.x0_count;
    idx[3] = x % s[3];
    x /= s[3];
    idx[2] = x % s[2];
    x /= s[2];
    idx[1] = x % s[1];
    idx[0] = x / s[1];
    return idx;
}

void TcpcSpace::response_given(std::size_t k, std::size_t x, std::span<double> out) const {
    const auto& h = hazards_.at(k);
    const std::size_t nh = h.bins.rhat_bins, nr = h.bins.r_bins;
    std::fill(out.begin(), out.end(), 0.0);
    const double* row = h.rhat->values().data() + x * nh;
    const auto& q = kernel_[k];
    for (std::size_t a = 0; a < nh; ++a) {
        if (row[a] == 0.0) continue;
        for (std::size_t r = 0; r < nr; ++r) out[r] += row[a] * q[a * nr + r];
    }
}

std::vector<double> TcpcSpace::likelihood(std::size_t k, std::size_t edge) const {
    const auto& h = hazards_.at(k);
    const std::size_t nh = h.bins.rhat_bins, nr = h.bins.r_bins;
    if (edge > nr) throw std::out_of_range("threshold edge beyond the r bins");
    std::vector<double> tail(nh, 0.0);
    for (std::size_t a = 0; a < nh; ++a)
        for (std::size_t r = edge; r < nr; ++r) tail[a] += kernel_[k][a * nr + r];
    std::vector<double> out(size(), 0.0);
    const auto& rv = h.rhat->values();
    for (std::size_t x = 0; x < out.size(); ++x) {
        double s = 0.0;
        for (std::size_t a = 0; a < nh; ++a) s += rv[x * nh + a] * tail[a];
        out[x] = s;
    }
    return out;
}

double JointHazardTable::pdf_volume() const {
    double v = 0.0;
    for (std::size_t a = 0; a < n1(); ++a)
        for (std::size_t b = 0; b < n2(); ++b)
            v += pdf[a * n2() + b] * (r1_edges[a + 1] - r1_edges[a]) * (r2_edges[b + 1] - r2_edges[b]);
    return v;
}

JointHazardTable joint_table_from_pmf(std::vector<double> r1_edges, std::vector<double> r2_edges,
                                      std::vector<double> pmf) {
    JointHazardTable t;
    t.r1_edges = std::move(r1_edges);
    t.r2_edges = std::move(r2_edges);
    t.pmf = std::move(pmf);
    const std::size_t n1 = t.n1(), n2 = t.n2();
    if (t.pmf.size() != n1 * n2) throw std::invalid_argument("joint PMF size does not match the bins");

    t.pdf.resize(n1 * n2);
    for (std::size_t a = 0; a < n1; ++a)
        for (std::size_t b = 0; b < n2; ++b)
            t.pdf[a * n2 + b] = t.pmf[a * n2 + b] /
                                ((t.r1_edges[a + 1] - t.r1_edges[a]) * (t.r2_edges[b + 1] - t.r2_edges[b]));

    t.exceedance.assign((n1 + 1) * (n2 + 1), 0.0);
    for (std::size_t a = n1; a-- > 0;)
        for (std::size_t b = n2; b-- > 0;)
            t.exceedance[a * (n2 + 1) + b] = t.pmf[a * n2 + b] + t.exceedance[(a + 1) * (n2 + 1) + b] +
                                             t.exceedance[a * (n2 + 1) + b + 1] -
                                             t.exceedance[(a + 1) * (n2 + 1) + b + 1];

    double m1 = 0.0, m2 = 0.0;
    for (std::size_t a = 0; a < n1; ++a)
        for (std::size_t b = 0; b < n2; ++b) {
            const double p = t.pmf[a * n2 + b];
            m1 += p * 0.5 * (t.r1_edges[a] + t.r1_edges[a + 1]);
            m2 += p * 0.5 * (t.r2_edges[b] + t.r2_edges[b + 1]);
        }
    double c11 = 0.0, c22 = 0.0, c12 = 0.0;
    for (std::size_t a = 0; a < n1; ++a)
        for (std::size_t b = 0; b < n2; ++b) {
            const double p = t.pmf[a * n2 + b];
            const double d1 = 0.5 * (t.r1_edges[a] + t.r1_edges[a + 1]) - m1;
            const double d2 = 0.5 * (t.r2_edges[b] + t.r2_edges[b + 1]) - m2;
            c11 += p * d1 * d1;
            c22 += p * d2 * d2;
            c12 += p * d1 * d2;
        }
    t.correlation = (c11 > 0.0 && c22 > 0.0) ? c12 / std::sqrt(c11 * c22) : 0.0;
    return t;
}

JointHazardTable joint_hazard(const TcpcSpace& space) {
    const std::size_t n1 = space.hazard(0).bins.r_bins, n2 = space.hazard(1).bins.r_bins;
    constexpr std::size_t kChunk = 1024;
    const std::size_t n_chunks = (space.size() + kChunk - 1) / kChunk;
    std::vector<std::vector<double>> partial(n_chunks);
    parallel_chunks(n_chunks, space.threads(), [&](std::size_t chunk) {
        std::vector<double> acc(n1 * n2, 0.0), p1(n1), p2(n2);
        const std::size_t end = std::min(space.size(), (chunk + 1) * kChunk);
        for (std::size_t x = chunk * kChunk; x < end; ++x) {
            const double px = space.prior()[x];
            if (px == 0.0) continue;
            space.response_given(0, x, p1);
            space.response_given(1, x, p2);
            for (std::size_t a = 0; a < n1; ++a) {
                const double w = px * p1[a];
                if (w == 0.0) continue;
                double* row = acc.data() + a * n2;
                for (std::size_t b = 0; b < n2; ++b) row[b] += w * p2[b];
            }
        }
        partial[chunk] = std::move(acc);
    });
    std::vector<double> pmf(n1 * n2, 0.0);
    for (const auto& p : partial)
        for (std::size_t k = 0; k < pmf.size(); ++k) pmf[k] += p[k];
    return joint_table_from_pmf(space.hazard(0).bins.r_edges(), space.hazard(1).bins.r_edges(), std::move(pmf));
}

JointHazardTable joint_hazard(const AssembledNetwork& net) {
    if (!net.net.has(kJointNode))
        throw std::invalid_argument("network was assembled without the joint node");
    auto pmf = query(net.net, {kJointNode}).posterior.values();
    return joint_table_from_pmf(net.r_edges[0], net.r_edges[1], std::move(pmf));
}

}  // namespace jpmbn
