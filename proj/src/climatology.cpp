#include "jpmbn/climatology.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace jpmbn {

const std::array<IntensityClass, kIntensityCount>& intensity_classes() {
    static const std::array<IntensityClass, kIntensityCount> classes{{
        {"LI", 8.0, 28.0},
        {"MI", 28.0, 48.0},
        {"HI", 48.0, 148.0},
    }};
    return classes;
}

std::size_t intensity_of(double dp) {
    const auto& c = intensity_classes();
    if (!(dp >= c[0].dp_lower && dp <= c[2].dp_upper))
        throw std::out_of_range("pressure deficit outside [8, 148] hPa");
    if (dp < c[1].dp_lower) return 0;
    if (dp < c[2].dp_lower) return 1;
    return 2;
}

StormClimatology::StormClimatology(std::array<ClassModel, kIntensityCount> classes,
                                   DirectionalModel heading)
    : classes_(std::move(classes)), heading_(std::move(heading)), heading_cdf_(heading_) {
    for (std::size_t c = 0; c < kIntensityCount; ++c) {
        classes_[c].dp.validate();
        classes_[c].vf.validate();
        classes_[c].rmax.validate();
        pearson_[c] = pearson_from_kendall(classes_[c].kendall);
        copulas_.emplace_back(pearson_[c].rho);
    }
}

double StormClimatology::marginal_cdf(std::size_t cls, StormParam p, double x) const {
    const auto& m = classes_.at(cls);
    switch (p) {
        case kDp: return m.dp.cdf(x);
        case kVf: return m.vf.cdf(x);
        case kRmax: return m.rmax.cdf(x);
        case kTheta: return heading_cdf_.cdf(x);
    }
    throw std::invalid_argument("unknown storm parameter");
}

double StormClimatology::marginal_quantile(std::size_t cls, StormParam p, double u) const {
    const auto& m = classes_.at(cls);
    switch (p) {
        case kDp: return m.dp.quantile(u);
        case kVf: return m.vf.quantile(u);
        case kRmax: return m.rmax.quantile(u);
        case kTheta: return heading_cdf_.quantile(u);
    }
    throw std::invalid_argument("unknown storm parameter");
}

StormDraw StormClimatology::draw(std::size_t cls, std::mt19937_64& rng) const {
    std::array<double, kStormParamCount> u{};
    copulas_.at(cls).draw_uniforms(rng, u);
    const auto& m = classes_[cls];
    return StormDraw{m.dp.quantile(u[kDp]), m.vf.quantile(u[kVf]), m.rmax.quantile(u[kRmax]),
                     heading_cdf_.quantile(u[kTheta])};
}

std::array<double, kIntensityCount> StormClimatology::weibull_class_prior() const {
    std::array<double, kIntensityCount> p{};
    double total = 0.0;
    for (std::size_t c = 0; c < kIntensityCount; ++c) {
        const auto& w = classes_[c].dp;
        p[c] = std::exp(-std::pow(w.lower / w.a, w.b)) - std::exp(-std::pow(w.upper / w.a, w.b));
        total += p[c];
    }
    for (auto& v : p) v /= total;
    return p;
}

std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                      static_cast<std::uint32_t>(substream),
                      static_cast<std::uint32_t>(substream >> 32)};
    return std::mt19937_64(seq);
}

std::vector<StormDraw> sample_joint(const StormClimatology& clim, std::size_t cls, std::size_t n,
                                    std::uint64_t seed, std::uint64_t stream) {
    auto rng = make_stream(seed, stream);
    std::vector<StormDraw> out;
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k) out.push_back(clim.draw(cls, rng));
    return out;
}

double great_circle_km(double lat1, double lon1, double lat2, double lon2) {
    constexpr double kEarthRadiusKm = 6371.0;
    constexpr double d2r = M_PI / 180.0;
    const double dlat = (lat2 - lat1) * d2r;
    const double dlon = (lon2 - lon1) * d2r;
    const double h = std::sin(dlat / 2) * std::sin(dlat / 2) +
                     std::cos(lat1 * d2r) * std::cos(lat2 * d2r) * std::sin(dlon / 2) * std::sin(dlon / 2);
    return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

std::vector<TrackRow> read_track_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read track file " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("track file is empty: " + path.string());

    const std::vector<std::string> expected{"storm_id", "timestamp", "lat",     "lon",
                                            "dp_hpa",   "vf_kmh",    "rmax_km", "theta_deg"};
    std::map<std::string, std::size_t> col;
    {
        std::stringstream ss(line);
        std::string name;
        for (std::size_t k = 0; std::getline(ss, name, ','); ++k) {
            while (!name.empty() && (name.back() == '\r' || name.back() == ' ')) name.pop_back();
            col[name] = k;
        }
    }
    for (const auto& e : expected)
        if (!col.contains(e)) throw std::runtime_error("track file missing column '" + e + "'");

    std::vector<TrackRow> rows;
    for (std::size_t lineno = 2; std::getline(in, line); ++lineno) {
        if (line.empty() || line == "\r") continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() < col.size())
            throw std::runtime_error("track file line " + std::to_string(lineno) + " is short");
        auto num = [&](const char* name) { return std::stod(cells.at(col.at(name))); };
        rows.push_back(TrackRow{cells[col["storm_id"]], cells[col["timestamp"]], num("lat"), num("lon"),
                                num("dp_hpa"), num("vf_kmh"), num("rmax_km"), num("theta_deg")});
    }
    return rows;
}

IngestResult ingest_samples(const std::vector<TrackRow>& rows, const StudyRegion& region,
                            double h_d_km) {
    if (!(region.capture_radius_km > 0.0)) throw std::invalid_argument("capture radius must be positive");
    if (!(h_d_km > 0.0)) throw std::invalid_argument("distance bandwidth must be positive");

    std::vector<std::string> order;  // first-seen order of storm ids
    std::set<std::string> seen;
    std::map<std::string, const TrackRow*> best;
    std::map<std::string, double> best_dist;
    for (const auto& r : rows) {
        if (seen.insert(r.storm_id).second) order.push_back(r.storm_id);
        const double d = great_circle_km(region.crl_lat, region.crl_lon, r.lat, r.lon);
        if (d > region.capture_radius_km) continue;
        auto it = best.find(r.storm_id);
        if (it == best.end() || r.dp_hpa > it->second->dp_hpa) {
            best[r.storm_id] = &r;
            best_dist[r.storm_id] = d;
        }
    }

    IngestResult out;
    for (const auto& id : order) {
        auto it = best.find(id);
        if (it == best.end()) {
            out.skipped_storms.push_back(id);
            continue;
        }
        const TrackRow& r = *it->second;
        const double d = best_dist[id];
        out.samples.push_back(StormSample{id, r.dp_hpa, r.vf_kmh, r.rmax_km, r.theta_deg, d,
                                          std::exp(-0.5 * (d / h_d_km) * (d / h_d_km))});
    }
    return out;
}

std::array<double, kIntensityCount> intensity_prior(const std::vector<StormSample>& samples) {
    if (samples.empty()) throw std::invalid_argument("intensity prior needs at least one sample");
    std::array<double, kIntensityCount> p{};
    double total = 0.0;
    for (const auto& s : samples) {
        if (!(s.weight >= 0.0)) throw std::invalid_argument("sample weights must be nonnegative");
        p[intensity_of(s.dp)] += s.weight;
        total += s.weight;
    }
    if (!(total > 0.0)) throw std::invalid_argument("total sample weight is zero");
    for (auto& v : p) v /= total;
    return p;
}

}  // namespace jpmbn
