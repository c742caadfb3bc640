#include "jpmbn/discretizer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "jpmbn/parallel.hpp"

namespace jpmbn {

namespace {

void check_increasing(const std::vector<double>& e, const char* name) {
    if (e.size() < 2) throw std::invalid_argument(std::string(name) + " bins need at least two edges");
    for (std::size_t k = 1; k < e.size(); ++k)
        if (!(e[k] > e[k - 1]))
            throw std::invalid_argument(std::string(name) + " bin edges must be strictly increasing");
}

bool has_edge(const std::vector<double>& e, double v) {
    return std::find(e.begin(), e.end(), v) != e.end();
}

constexpr double kKmPerDeg = 6371.0 * M_PI / 180.0;

}  // namespace

void BinScheme::validate() const {
    check_increasing(dp, "DP");
    check_increasing(vf, "VF");
    check_increasing(rmax, "RMAX");
    check_increasing(theta, "THETA");
    const auto& cls = intensity_classes();
    if (dp.front() != cls[0].dp_lower || dp.back() != cls[2].dp_upper)
        throw std::invalid_argument("DP bins must span exactly [8, 148] hPa");
    if (!has_edge(dp, cls[1].dp_lower) || !has_edge(dp, cls[2].dp_lower))
        throw std::invalid_argument("DP bins must have edges at the intensity boundaries 28 and 48 hPa");
    if (theta.front() < -180.0 || theta.back() > 180.0)
        throw std::invalid_argument("THETA bins must lie within [-180, 180] degrees");
    if (vf.front() < 0.0 || rmax.front() < 0.0)
        throw std::invalid_argument("VF and RMAX bin edges must be nonnegative");
    if (x0_count == 0) throw std::invalid_argument("need at least one landfall representative");
}

const std::vector<double>& BinScheme::edges(StormParam p) const {
    switch (p) {
        case kDp: return dp;
        case kVf: return vf;
        case kRmax: return rmax;
        case kTheta: return theta;
    }
    throw std::invalid_argument("unknown storm parameter");
}

std::array<std::size_t, kStormParamCount> BinScheme::shape() const {
    return {dp.size() - 1, vf.size() - 1, rmax.size() - 1, theta.size() - 1};
}

std::size_t BinScheme::parameter_cells() const {
    const auto s = shape();
    return s[0] * s[1] * s[2] * s[3];
}

std::vector<double> close_edges(std::vector<double> lower_edges, double upper) {
    if (lower_edges.empty() || !(upper > lower_edges.back()))
        throw std::invalid_argument("closing edge must exceed the last lower edge");
    lower_edges.push_back(upper);
    return lower_edges;
}

std::size_t locate_bin(std::span<const double> edges, double x) {
    const std::size_t n = edges.size() - 1;
    auto it = std::upper_bound(edges.begin() + 1, edges.end() - 1, x);
    return std::min<std::size_t>(static_cast<std::size_t>(it - (edges.begin() + 1)), n - 1);
}

std::vector<std::string> bin_labels(std::span<const double> edges, int precision) {
    std::vector<std::string> out;
    for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
        std::ostringstream s;
        s.precision(precision);
        s << "[" << edges[k] << "," << edges[k + 1] << ")";
        out.push_back(s.str());
    }
    return out;
}

double DiscreteJointTable::std_error(std::size_t cell) const {
    const double p = prob.at(cell);
    return std::sqrt(p * (1.0 - p) / static_cast<double>(n_samples));
}

std::vector<double> DiscreteJointTable::marginal(StormParam p) const {
    std::vector<double> out(shape[p], 0.0);
    std::size_t cell = 0;
    for (std::size_t a = 0; a < shape[0]; ++a)
        for (std::size_t b = 0; b < shape[1]; ++b)
            for (std::size_t c = 0; c < shape[2]; ++c)
                for (std::size_t d = 0; d < shape[3]; ++d, ++cell) {
                    const std::array<std::size_t, 4> idx{a, b, c, d};
                    out[idx[p]] += prob[cell];
                }
    return out;
}

DiscreteJointTable discretize_joint(const StormClimatology& clim, const BinScheme& bins,
                                    std::size_t cls, const DiscretizeOptions& options) {
    bins.validate();
    if (options.n_samples < options.min_samples || options.n_samples == 0)
        throw std::invalid_argument("discretization needs at least " +
                                    std::to_string(options.min_samples) + " samples");
    if (options.chunk_size == 0) throw std::invalid_argument("chunk size must be positive");

    DiscreteJointTable table;
    table.intensity = cls;
    table.shape = bins.shape();
    table.n_samples = options.n_samples;
    const std::size_t cells = bins.parameter_cells();

    const std::size_t n_chunks = (options.n_samples + options.chunk_size - 1) / options.chunk_size;
    std::vector<std::vector<std::uint64_t>> partial(n_chunks);
    parallel_chunks(n_chunks, options.threads, [&](std::size_t chunk) {
        auto rng = make_stream(options.seed, 1000 + cls, chunk);
        const std::uint64_t begin = chunk * options.chunk_size;
        const std::uint64_t end = std::min<std::uint64_t>(options.n_samples, begin + options.chunk_size);
        std::vector<std::uint64_t> counts(cells, 0);
        for (std::uint64_t s = begin; s < end; ++s) {
            const StormDraw d = clim.draw(cls, rng);
            ++counts[table.index(locate_bin(bins.dp, d.dp), locate_bin(bins.vf, d.vf),
                                 locate_bin(bins.rmax, d.rmax), locate_bin(bins.theta, d.theta))];
        }
        partial[chunk] = std::move(counts);
    });

    table.counts.assign(cells, 0);
    for (const auto& counts : partial)
        for (std::size_t c = 0; c < cells; ++c) table.counts[c] += counts[c];
    table.prob.resize(cells);
    for (std::size_t c = 0; c < cells; ++c)
        table.prob[c] = static_cast<double>(table.counts[c]) / static_cast<double>(options.n_samples);
    return table;
}

namespace {

// Divides each row of `joint` (rows of length `card`) by its sum; empty rows become uniform.
std::vector<double> rows_to_conditional(const std::vector<double>& joint, std::size_t card,
                                        const std::string& what, std::vector<std::string>& flags) {
    std::vector<double> out(joint.size());
    const std::size_t rows = joint.size() / card;
    for (std::size_t r = 0; r < rows; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < card; ++c) s += joint[r * card + c];
        for (std::size_t c = 0; c < card; ++c)
            out[r * card + c] = s > 0.0 ? joint[r * card + c] / s : 1.0 / static_cast<double>(card);
        if (!(s > 0.0)) flags.push_back(what + " row " + std::to_string(r));
    }
    return out;
}

}  // namespace

CPTSet conditionalize(const std::array<double, kIntensityCount>& p_i,
                      const std::vector<DiscreteJointTable>& slices, std::size_t x0_count) {
    if (slices.size() != kIntensityCount) throw std::invalid_argument("need one joint slice per intensity class");
    const auto shape = slices[0].shape;
    for (const auto& s : slices)
        if (s.shape != shape) throw std::invalid_argument("joint slices have different shapes");
    double psum = 0.0;
    for (double p : p_i) {
        if (!(p >= 0.0)) throw std::invalid_argument("intensity prior must be nonnegative");
        psum += p;
    }
    if (std::abs(psum - 1.0) > 1e-9) throw std::invalid_argument("intensity prior must sum to one");

    const std::size_t nd = shape[0], nv = shape[1], nr = shape[2], nt = shape[3];
    CPTSet out;
    out.p_i = Factor({node::kI}, {kIntensityCount}, {p_i.begin(), p_i.end()});

    // p(dp | i) from each slice's dp marginal.
    std::vector<double> dp_given_i(kIntensityCount * nd, 0.0);
    for (std::size_t c = 0; c < kIntensityCount; ++c) {
        const auto m = slices[c].marginal(kDp);
        std::copy(m.begin(), m.end(), dp_given_i.begin() + static_cast<std::ptrdiff_t>(c * nd));
    }
    out.p_dp = Factor({node::kI, node::kDp}, {kIntensityCount, nd},
                      rows_to_conditional(dp_given_i, nd, "DP|I", out.flagged_rows));

    // Mixture joint over (dp, vf, rmax, theta), then successive marginals.
    std::vector<double> j4(nd * nv * nr * nt, 0.0);
    for (std::size_t c = 0; c < kIntensityCount; ++c)
        for (std::size_t k = 0; k < j4.size(); ++k) j4[k] += p_i[c] * slices[c].prob[k];
    std::vector<double> j3(nd * nv * nr, 0.0);
    for (std::size_t k = 0; k < j4.size(); ++k) j3[k / nt] += j4[k];
    std::vector<double> j2(nd * nv, 0.0);
    for (std::size_t k = 0; k < j3.size(); ++k) j2[k / nr] += j3[k];

    out.p_vf = Factor({node::kDp, node::kVf}, {nd, nv},
                      rows_to_conditional(j2, nv, "VF|DP", out.flagged_rows));
    out.p_rmax = Factor({node::kDp, node::kVf, node::kRmax}, {nd, nv, nr},
                        rows_to_conditional(j3, nr, "RMAX|DP,VF", out.flagged_rows));
    out.p_theta = Factor({node::kDp, node::kVf, node::kRmax, node::kTheta}, {nd, nv, nr, nt},
                         rows_to_conditional(j4, nt, "THETA|DP,VF,RMAX", out.flagged_rows));
    out.p_x0 = Factor({node::kX0}, {x0_count},
                      std::vector<double>(x0_count, 1.0 / static_cast<double>(x0_count)));
    return out;
}

DiscreteNetwork CPTSet::to_network(const BinScheme& bins) const {
    DiscreteNetwork net;
    std::vector<std::string> i_labels;
    for (const auto& c : intensity_classes()) i_labels.push_back(c.label);
    std::vector<std::string> x0_labels;
    for (std::size_t k = 0; k < p_x0.size(); ++k) x0_labels.push_back("x0_" + std::to_string(k));

    net.add_node({node::kI, i_labels}, {}, p_i);
    net.add_node({node::kDp, bin_labels(bins.dp)}, {node::kI}, p_dp);
    net.add_node({node::kVf, bin_labels(bins.vf)}, {node::kDp}, p_vf);
    net.add_node({node::kRmax, bin_labels(bins.rmax)}, {node::kDp, node::kVf}, p_rmax);
    net.add_node({node::kTheta, bin_labels(bins.theta)}, {node::kDp, node::kVf, node::kRmax}, p_theta);
    net.add_node({node::kX0, x0_labels}, {}, p_x0);
    return net;
}

double TrackLine::cross_track_km(double lat, double lon) const {
    const double east = (lon - lon0) * kKmPerDeg * std::cos(lat0 * M_PI / 180.0);
    const double north = (lat - lat0) * kKmPerDeg;
    const double h = heading_deg * M_PI / 180.0;
    return east * std::cos(h) - north * std::sin(h);
}

double TrackLine::along_track_km(double lat, double lon) const {
    const double east = (lon - lon0) * kKmPerDeg * std::cos(lat0 * M_PI / 180.0);
    const double north = (lat - lat0) * kKmPerDeg;
    const double h = heading_deg * M_PI / 180.0;
    return east * std::sin(h) + north * std::cos(h);
}

double LandfallGeometry::spacing_deg() const {
    return (config.lon_max - config.lon_min) / static_cast<double>(config.count);
}

TrackLine LandfallGeometry::track(std::size_t x0, double heading_deg) const {
    return TrackLine{config.reference_lat, longitudes.at(x0), heading_deg};
}

LandfallGeometry build_landfall(const LandfallConfig& config) {
    if (config.count == 0 || !(config.lon_max > config.lon_min))
        throw std::invalid_argument("landfall line needs a positive span and count");
    LandfallGeometry g{config, {}};
    const double step = g.spacing_deg();
    for (std::size_t k = 0; k < config.count; ++k)
        g.longitudes.push_back(config.lon_min + (static_cast<double>(k) + 0.5) * step);
    return g;
}

Factor landfall_prior(const LandfallGeometry& geom) {
    const std::size_t n = geom.longitudes.size();
    return Factor({node::kX0}, {n}, std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

}  // namespace jpmbn
