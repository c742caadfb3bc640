#include "jpmbn/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "jpmbn/climatology.hpp"
#include "jpmbn/distributions.hpp"
#include "jpmbn/parallel.hpp"

namespace jpmbn {

void PiecewiseLinear::validate(const std::string& field) const {
    if (x.empty() || x.size() != y.size())
        throw std::invalid_argument(field + ": needs matching, nonempty knot and value lists");
    for (std::size_t k = 0; k < x.size(); ++k) {
        if (k > 0 && !(x[k] > x[k - 1]))
            throw std::invalid_argument(field + ": knots must be strictly increasing");
        if (!(y[k] >= 0.0) || !std::isfinite(y[k]))
            throw std::invalid_argument(field + ": value " + std::to_string(k) + " is negative or not finite");
    }
}

double PiecewiseLinear::operator()(double v) const {
    if (v <= x.front()) return y.front();
    if (v >= x.back()) return y.back();
    auto it = std::upper_bound(x.begin(), x.end(), v);
    const auto k = static_cast<std::size_t>(it - x.begin());
    const double t = (v - x[k - 1]) / (x[k] - x[k - 1]);
    return y[k - 1] + t * (y[k] - y[k - 1]);
}

std::vector<double> ErrorModel::bin_masses() const {
    std::vector<double> m(bin_count());
    for (std::size_t k = 0; k < m.size(); ++k) {
        const double a = epsilon_edges[k], b = epsilon_edges[k + 1];
        // Evaluate on the side of zero where the difference is better conditioned.
        m[k] = a >= 0.0 ? std_normal_sf(a) - std_normal_sf(b) : std_normal_cdf(b) - std_normal_cdf(a);
    }
    return m;
}

void ErrorModel::validate(const std::string& field) const {
    if (epsilon_edges.size() < 2) throw std::invalid_argument("epsilon bins need at least two edges");
    for (std::size_t k = 1; k < epsilon_edges.size(); ++k)
        if (!(epsilon_edges[k] > epsilon_edges[k - 1]))
            throw std::invalid_argument("epsilon bin edges must be strictly increasing");
    sigma_c.validate(field);
}

void ResponseBinScheme::validate() const {
    if (!(rhat_hi > rhat_lo) || rhat_bins == 0) throw std::invalid_argument("bad r_hat bin range");
    if (!(r_hi > r_lo) || r_bins == 0) throw std::invalid_argument("bad r bin range");
    if (r_lo > rhat_lo || r_hi < rhat_hi)
        throw std::invalid_argument("r bins must span the r_hat range");
}

namespace {
std::vector<double> uniform_edges(double lo, double hi, std::size_t n) {
    std::vector<double> e(n + 1);
    for (std::size_t k = 0; k <= n; ++k)
        e[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n);
    e.back() = hi;
    return e;
}

struct UniformBins {
    double lo, width;
    std::size_t n;
    struct Located {
        std::size_t bin;
        bool low;   // clamped up to the first bin
        bool high;  // clamped down to the last bin
    };
    Located locate(double v) const {
        const double pos = std::floor((v - lo) / width);
        if (!(pos >= 0.0)) return {0, true, false};
        if (pos >= static_cast<double>(n)) return {n - 1, false, !(v <= lo + width * static_cast<double>(n))};
        return {static_cast<std::size_t>(pos), false, false};
    }
};
}  // namespace

std::vector<double> ResponseBinScheme::rhat_edges() const { return uniform_edges(rhat_lo, rhat_hi, rhat_bins); }
std::vector<double> ResponseBinScheme::r_edges() const { return uniform_edges(r_lo, r_hi, r_bins); }

CptBuild build_rhat_cpt(const ResponseModel& model, const BinScheme& bins,
                        const ResponseBinScheme& rbins, const McsConfig& cfg,
                        const std::string& rhat_id, std::uint64_t stream) {
    bins.validate();
    rbins.validate();
    if (cfg.n_sim == 0) throw std::invalid_argument("n_sim must be at least 1");
    if (cfg.chunk_size == 0) throw std::invalid_argument("chunk size must be positive");

    const auto shape = bins.shape();
    const std::size_t nx0 = bins.x0_count;
    const std::size_t rows = bins.tcpc_count();
    const std::size_t nb = rbins.rhat_bins;
    const UniformBins locator{rbins.rhat_lo, (rbins.rhat_hi - rbins.rhat_lo) / static_cast<double>(nb), nb};
    const bool continuous = model.continuous_heading();

    std::vector<double> values(rows * nb, 0.0);
    const std::size_t n_chunks = (rows + cfg.chunk_size - 1) / cfg.chunk_size;
    std::vector<std::uint64_t> clamped(n_chunks, 0), clamped_high(n_chunks, 0);
    parallel_chunks(n_chunks, cfg.threads, [&](std::size_t chunk) {
        auto rng = make_stream(cfg.seed, 2000 + stream, chunk);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        const std::size_t end = std::min(rows, (chunk + 1) * cfg.chunk_size);
        std::vector<std::uint64_t> counts(nb);
        for (std::size_t row = chunk * cfg.chunk_size; row < end; ++row) {
            std::size_t rest = row;
            const std::size_t x0 = rest % nx0;
            rest /= nx0;
            const std::size_t it = rest % shape[3];
            rest /= shape[3];
            const std::size_t ir = rest % shape[2];
            rest /= shape[2];
            const std::size_t iv = rest % shape[1];
            const std::size_t id = rest / shape[1];
            std::fill(counts.begin(), counts.end(), 0);
            for (std::size_t s = 0; s < cfg.n_sim; ++s) {
                auto within = [&](const std::vector<double>& e, std::size_t k) {
                    return e[k] + unit(rng) * (e[k + 1] - e[k]);
                };
                StormInput x{within(bins.dp, id), within(bins.vf, iv), within(bins.rmax, ir),
                             continuous ? within(bins.theta, it) : bins.theta[it], x0};
                const auto loc = locator.locate(model.predict(x));
                ++counts[loc.bin];
                clamped[chunk] += loc.low || loc.high;
                clamped_high[chunk] += loc.high;
            }
            for (std::size_t b = 0; b < nb; ++b)
                values[row * nb + b] = static_cast<double>(counts[b]) / static_cast<double>(cfg.n_sim);
        }
    });

    CptBuild out{Factor({node::kDp, node::kVf, node::kRmax, node::kTheta, node::kX0, rhat_id},
                        {shape[0], shape[1], shape[2], shape[3], nx0, nb}, std::move(values)),
                 static_cast<std::uint64_t>(rows) * cfg.n_sim, 0, 0};
    for (std::size_t c = 0; c < clamped.size(); ++c) {
        out.clamped += clamped[c];
        out.clamped_high += clamped_high[c];
    }
    return out;
}

CptBuild build_r_cpt(const ErrorModel& err, const ResponseBinScheme& rbins, const McsConfig& cfg,
                     const std::string& rhat_id, const std::string& eps_id, const std::string& r_id,
                     std::uint64_t stream) {
    err.validate();
    rbins.validate();
    if (cfg.n_sim_error == 0) throw std::invalid_argument("n_sim_error must be at least 1");

    const auto rhat_edges = rbins.rhat_edges();
    const std::size_t nh = rbins.rhat_bins, ne = err.bin_count(), nr = rbins.r_bins;
    const UniformBins locator{rbins.r_lo, (rbins.r_hi - rbins.r_lo) / static_cast<double>(nr), nr};

    std::vector<double> values(nh * ne * nr, 0.0);
    std::vector<std::uint64_t> clamped(nh * ne, 0), clamped_high(nh * ne, 0);
    parallel_chunks(nh * ne, cfg.threads, [&](std::size_t row) {
        const std::size_t h = row / ne, k = row % ne;
        auto rng = make_stream(cfg.seed, 3000 + stream, row);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        const double a = err.epsilon_edges[k], b = err.epsilon_edges[k + 1];
        const bool upper_side = a >= 0.0;
        // Probability interval of the truncated normal, on the side with better precision.
        const double p_lo = upper_side ? std_normal_sf(b) : std_normal_cdf(a);
        const double p_hi = upper_side ? std_normal_sf(a) : std_normal_cdf(b);
        std::vector<std::uint64_t> counts(nr, 0);
        for (std::size_t s = 0; s < cfg.n_sim_error; ++s) {
            const double rhat = rhat_edges[h] + unit(rng) * (rhat_edges[h + 1] - rhat_edges[h]);
            double p = p_lo + unit(rng) * (p_hi - p_lo);
            p = std::clamp(p, 1e-300, 1.0 - 1e-16);
            double eps = std_normal_quantile(p);
            if (upper_side) eps = -eps;
            eps = std::clamp(eps, a, b);
            const auto loc = locator.locate(rhat + eps * err.sigma_c(rhat));
            ++counts[loc.bin];
            clamped[row] += loc.low || loc.high;
            clamped_high[row] += loc.high;
        }
        for (std::size_t r = 0; r < nr; ++r)
            values[row * nr + r] = static_cast<double>(counts[r]) / static_cast<double>(cfg.n_sim_error);
    });

    CptBuild out{Factor({rhat_id, eps_id, r_id}, {nh, ne, nr}, std::move(values)),
                 static_cast<std::uint64_t>(nh * ne) * cfg.n_sim_error, 0, 0};
    for (std::size_t row = 0; row < clamped.size(); ++row) {
        out.clamped += clamped[row];
        out.clamped_high += clamped_high[row];
    }
    return out;
}

SyntheticSurgeModel::SyntheticSurgeModel(SyntheticParams p, LandfallGeometry geom)
    : p_(p), geom_(std::move(geom)) {}

double SyntheticSurgeModel::predict(const StormInput& x) const {
    const double d = geom_.track(x.x0, x.theta).cross_track_km(p_.site_lat, p_.site_lon);
    const double intensity = std::pow(x.dp / 50.0, p_.surge_dp_exp);
    const double speed = std::max(0.05, 1.0 + p_.surge_vf_gain * std::log(x.vf / 20.0));
    const double q = x.rmax / p_.surge_rmax_peak;
    const double size = q * std::exp(1.0 - q);
    const double z = (d - p_.surge_track_offset_km) / p_.surge_track_width_km;
    const double track = p_.surge_floor + (1.0 - p_.surge_floor) * std::exp(-0.5 * z * z);
    return p_.surge_offset + p_.surge_scale * intensity * speed * size * track;
}

SyntheticRainModel::SyntheticRainModel(SyntheticParams p, LandfallGeometry geom)
    : p_(p), geom_(std::move(geom)) {}

double SyntheticRainModel::predict(const StormInput& x) const {
    const double d = geom_.track(x.x0, x.theta).cross_track_km(p_.site_lat, p_.site_lon);
    const double z = d / p_.rain_track_width_km;
    const double track = p_.rain_floor + (1.0 - p_.rain_floor) * std::exp(-0.5 * z * z);
    return p_.rain_scale * std::pow(x.dp / 50.0, p_.rain_dp_exp) * std::pow(20.0 / x.vf, p_.rain_vf_exp) *
           std::pow(x.rmax / 40.0, p_.rain_rmax_exp) * track;
}

SyntheticModels synthetic_models(const SyntheticParams& params, const LandfallGeometry& geom) {
    return {std::make_unique<SyntheticSurgeModel>(params, geom),
            std::make_unique<SyntheticRainModel>(params, geom)};
}

TabulatedModel::TabulatedModel(std::string hazard, std::vector<double> dp, std::vector<double> vf,
                               std::vector<double> rmax,
                               std::map<std::pair<double, std::size_t>, std::vector<double>> levels)
    : hazard_(std::move(hazard)), dp_(std::move(dp)), vf_(std::move(vf)), rmax_(std::move(rmax)),
      levels_(std::move(levels)) {
    for (const auto* axis : {&dp_, &vf_, &rmax_}) {
        if (axis->size() < 2) throw ModelError("tabulated grid needs at least two knots per axis");
        for (std::size_t k = 1; k < axis->size(); ++k)
            if (!((*axis)[k] > (*axis)[k - 1])) throw ModelError("tabulated grid knots must increase");
    }
    const std::size_t n = dp_.size() * vf_.size() * rmax_.size();
    for (const auto& [level, values] : levels_)
        if (values.size() != n) throw ModelError("tabulated grid level is incomplete");
}

namespace {
// Segment index and weight of v on the knot axis; throws outside the hull.
std::pair<std::size_t, double> segment(const std::vector<double>& knots, double v, const char* axis) {
    if (!(v >= knots.front() && v <= knots.back()))
        throw ModelError(std::string("query outside tabulated grid on axis ") + axis);
    auto it = std::upper_bound(knots.begin(), knots.end(), v);
    std::size_t k = static_cast<std::size_t>(it - knots.begin());
    k = std::clamp<std::size_t>(k, 1, knots.size() - 1) - 1;
    return {k, (v - knots[k]) / (knots[k + 1] - knots[k])};
}
}  // namespace

double TabulatedModel::predict(const StormInput& x) const {
    auto it = levels_.find({x.theta, x.x0});
    if (it == levels_.end())
        throw ModelError("tabulated model has no level theta=" + std::to_string(x.theta) +
                         " x0=" + std::to_string(x.x0));
    const auto& v = it->second;
    const auto [i, ti] = segment(dp_, x.dp, "dp");
    const auto [j, tj] = segment(vf_, x.vf, "vf");
    const auto [k, tk] = segment(rmax_, x.rmax, "rmax");
    const std::size_t nv = vf_.size(), nr = rmax_.size();
    auto at = [&](std::size_t a, std::size_t b, std::size_t c) { return v[(a * nv + b) * nr + c]; };
    double out = 0.0;
    for (int da = 0; da < 2; ++da)
        for (int db = 0; db < 2; ++db)
            for (int dc = 0; dc < 2; ++dc) {
                const double w = (da ? ti : 1.0 - ti) * (db ? tj : 1.0 - tj) * (dc ? tk : 1.0 - tk);
                if (w != 0.0) out += w * at(i + da, j + db, k + dc);
            }
    return out;
}

TabulatedModel tabulated_model(const std::filesystem::path& grid_file, const std::string& hazard) {
    std::ifstream in(grid_file);
    if (!in) throw ModelError("cannot read tabulated model " + grid_file.string());
    std::string line;
    std::getline(in, line);
    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
            header.push_back(cell);
        }
    }
    const std::vector<std::string> expected{"dp", "vf", "rmax", "theta", "x0", "value"};
    if (header != expected) throw ModelError("tabulated model header must be dp,vf,rmax,theta,x0,value");

    struct Row {
        double dp, vf, rmax, theta;
        std::size_t x0;
        double value;
    };
    std::vector<Row> rows;
    std::set<double> dps, vfs, rmaxs;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        std::stringstream ss(line);
        std::string c[6];
        for (auto& s : c) std::getline(ss, s, ',');
        Row r{std::stod(c[0]), std::stod(c[1]), std::stod(c[2]), std::stod(c[3]),
              static_cast<std::size_t>(std::stoul(c[4])), std::stod(c[5])};
        if (!std::isfinite(r.value)) throw ModelError("tabulated model value is not finite");
        rows.push_back(r);
        dps.insert(r.dp);
        vfs.insert(r.vf);
        rmaxs.insert(r.rmax);
    }
    std::vector<double> dp(dps.begin(), dps.end()), vf(vfs.begin(), vfs.end()),
        rmax(rmaxs.begin(), rmaxs.end());
    const std::size_t n = dp.size() * vf.size() * rmax.size();
    std::map<std::pair<double, std::size_t>, std::vector<double>> levels;
    std::map<std::pair<double, std::size_t>, std::vector<bool>> seen;
    auto pos = [](const std::vector<double>& axis, double v) {
        return static_cast<std::size_t>(std::lower_bound(axis.begin(), axis.end(), v) - axis.begin());
    };
    for (const auto& r : rows) {
        auto key = std::make_pair(r.theta, r.x0);
        auto& vals = levels[key];
        auto& mark = seen[key];
        if (vals.empty()) {
            vals.assign(n, 0.0);
            mark.assign(n, false);
        }
        const std::size_t idx = (pos(dp, r.dp) * vf.size() + pos(vf, r.vf)) * rmax.size() + pos(rmax, r.rmax);
        vals[idx] = r.value;
        mark[idx] = true;
    }
    for (const auto& [key, mark] : seen)
        if (std::find(mark.begin(), mark.end(), false) != mark.end())
            throw ModelError("tabulated model level theta=" + std::to_string(key.first) +
                             " x0=" + std::to_string(key.second) + " does not cover the full grid");
    return TabulatedModel(hazard, std::move(dp), std::move(vf), std::move(rmax), std::move(levels));
}

}  // namespace jpmbn
