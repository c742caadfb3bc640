#include "jpmbn/study.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "jpmbn/network_io.hpp"
#include "jpmbn/parallel.hpp"

namespace jpmbn {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_number(double v) {
    if (v == 0.0) return "0";  // folds -0
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string StudyConfig::hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : document.dump()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---------------------------------------------------------------------------
// Config parsing

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& what) {
    throw ConfigError("config field '" + field + "': " + what);
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

const json& require(const json& obj, const std::string& key, const std::string& path) {
    if (!obj.is_object()) fail(path, "must be an object");
    if (!obj.contains(key)) fail(join(path, key), "is required");
    return obj.at(key);
}

double as_number(const json& j, const std::string& field) {
    if (!j.is_number()) fail(field, "must be a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) fail(field, "must be finite");
    return v;
}

double number(const json& obj, const std::string& key, const std::string& path) {
    return as_number(require(obj, key, path), join(path, key));
}

double number_or(const json& obj, const std::string& key, const std::string& path, double fallback) {
    if (!obj.is_object() || !obj.contains(key)) return fallback;
    return as_number(obj.at(key), join(path, key));
}

std::uint64_t count_or(const json& obj, const std::string& key, const std::string& path, std::uint64_t fallback) {
    if (!obj.is_object() || !obj.contains(key)) return fallback;
    const auto& j = obj.at(key);
    if (!j.is_number_integer() || j.get<std::int64_t>() < 0) fail(join(path, key), "must be a nonnegative integer");
    return j.get<std::uint64_t>();
}

std::vector<double> numbers(const json& j, const std::string& field) {
    if (!j.is_array() || j.empty()) fail(field, "must be a nonempty array of numbers");
    std::vector<double> out;
    for (std::size_t k = 0; k < j.size(); ++k) out.push_back(as_number(j[k], field + "[" + std::to_string(k) + "]"));
    return out;
}

std::string text(const json& obj, const std::string& key, const std::string& path) {
    const auto& j = require(obj, key, path);
    if (!j.is_string()) fail(join(path, key), "must be a string");
    return j.get<std::string>();
}

// Runs a library validator and re-raises its message against `field`.
template <class F>
void checked(const std::string& field, F&& f) {
    try {
        f();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        fail(field, e.what());
    }
}

ResponseBinScheme parse_response_bins(const json& h, const std::string& path) {
    ResponseBinScheme b;
    const auto& rh = require(h, "rhat", path);
    const auto& r = require(h, "r", path);
    b.rhat_lo = number(rh, "lo", join(path, "rhat"));
    b.rhat_hi = number(rh, "hi", join(path, "rhat"));
    b.rhat_bins = count_or(rh, "bins", join(path, "rhat"), 40);
    b.r_lo = number(r, "lo", join(path, "r"));
    b.r_hi = number(r, "hi", join(path, "r"));
    b.r_bins = count_or(r, "bins", join(path, "r"), 80);
    checked(path, [&] { b.validate(); });
    return b;
}

HazardSpec parse_hazard(const json& h, const std::string& path, const fs::path& base) {
    HazardSpec s;
    if (h.contains("model")) s.model = text(h, "model", path);
    if (s.model == "tabulated") {
        s.grid = (base / text(h, "grid", path)).lexically_normal();
        if (!fs::exists(s.grid)) fail(join(path, "grid"), "file not found: " + s.grid.string());
    } else if (s.model != "synthetic") {
        fail(join(path, "model"), "must be 'synthetic' or 'tabulated'");
    }
    s.bins = parse_response_bins(h, path);
    const auto& sc = require(h, "sigma_c", path);
    const std::string sc_path = join(path, "sigma_c");
    s.error.sigma_c.x = numbers(require(sc, "x", sc_path), join(sc_path, "x"));
    s.error.sigma_c.y = numbers(require(sc, "y", sc_path), join(sc_path, "y"));
    try {
        s.error.validate(sc_path);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config field ") + e.what());
    }
    return s;
}

void parse_synthetic(const json& j, const std::string& path, SyntheticParams& p) {
    static const std::map<std::string, double SyntheticParams::*> fields{
        {"surge_scale", &SyntheticParams::surge_scale},
        {"surge_dp_exp", &SyntheticParams::surge_dp_exp},
        {"surge_vf_gain", &SyntheticParams::surge_vf_gain},
        {"surge_rmax_peak", &SyntheticParams::surge_rmax_peak},
        {"surge_track_offset_km", &SyntheticParams::surge_track_offset_km},
        {"surge_track_width_km", &SyntheticParams::surge_track_width_km},
        {"surge_floor", &SyntheticParams::surge_floor},
        {"surge_offset", &SyntheticParams::surge_offset},
        {"rain_scale", &SyntheticParams::rain_scale},
        {"rain_dp_exp", &SyntheticParams::rain_dp_exp},
        {"rain_vf_exp", &SyntheticParams::rain_vf_exp},
        {"rain_rmax_exp", &SyntheticParams::rain_rmax_exp},
        {"rain_track_width_km", &SyntheticParams::rain_track_width_km},
        {"rain_floor", &SyntheticParams::rain_floor},
    };
    if (!j.is_object()) fail(path, "must be an object");
    for (const auto& [key, value] : j.items()) {
        const auto it = fields.find(key);
        if (it == fields.end()) fail(join(path, key), "unknown synthetic-model coefficient");
        p.*(it->second) = as_number(value, join(path, key));
    }
    if (!(p.surge_rmax_peak > 0) || !(p.surge_track_width_km > 0) || !(p.rain_track_width_km > 0))
        fail(path, "peak radius and track widths must be positive");
}

std::array<std::optional<double>, kHazardCount> parse_thresholds(const json& j, const std::string& path) {
    std::array<std::optional<double>, kHazardCount> out;
    if (!j.is_object()) fail(path, "must be an object");
    for (const auto& [key, value] : j.items()) {
        if (key == "label") continue;
        std::size_t k = 0;
        while (k < kHazardCount && kHazardNames[k] != key) ++k;
        if (k == kHazardCount) fail(join(path, key), "unknown hazard (expected surge or rainfall)");
        out[k] = as_number(value, join(path, key));
    }
    return out;
}

Eigen::Matrix4d parse_kendall(const json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 4) fail(path, "must be a 4x4 matrix");
    Eigen::Matrix4d m;
    for (int r = 0; r < 4; ++r) {
        const auto row = numbers(j[r], path + "[" + std::to_string(r) + "]");
        if (row.size() != 4) fail(path, "must be a 4x4 matrix");
        for (int c = 0; c < 4; ++c) m(r, c) = row[c];
    }
    checked(path, [&] { (void)pearson_from_kendall(m); });
    return m;
}

std::vector<double> closed_edges(const StudyConfig& cfg, const json& bins, const std::string& key, StormParam p,
                                 double q) {
    const std::string path = join("bins", key);
    auto lower = numbers(require(bins, key, "bins"), path);
    double upper = 0.0;
    for (std::size_t c = 0; c < kIntensityCount; ++c) {
        const auto& m = cfg.classes[c];
        upper = std::max(upper, p == kVf ? m.vf.quantile(q) : m.rmax.quantile(q));
    }
    if (!(upper > lower.back()))
        fail(path, "last lower edge lies above the closing percentile " + format_number(upper));
    return close_edges(std::move(lower), upper);
}

}  // namespace

StudyConfig parse_config(const json& doc, const fs::path& base_dir) {
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    StudyConfig cfg;
    cfg.document = doc;
    cfg.name = doc.contains("name") ? text(doc, "name", "") : "study";
    cfg.output_dir = (base_dir / text(doc, "output_dir", "")).lexically_normal();
    cfg.seed = count_or(doc, "seed", "", 1);
    cfg.threads = count_or(doc, "threads", "", 0);

    if (doc.contains("region")) {
        const auto& r = doc.at("region");
        cfg.region.crl_lat = number_or(r, "crl_lat", "region", cfg.region.crl_lat);
        cfg.region.crl_lon = number_or(r, "crl_lon", "region", cfg.region.crl_lon);
        cfg.region.capture_radius_km = number_or(r, "capture_radius_km", "region", cfg.region.capture_radius_km);
        if (!(cfg.region.capture_radius_km > 0)) fail("region.capture_radius_km", "must be positive");
    }

    // Heading model: explicit samples or ingested track file.
    const auto& hd = require(doc, "heading", "");
    cfg.heading.kappa = number_or(hd, "kappa", "heading", 4.0);
    cfg.heading.h_d_km = number_or(hd, "h_d_km", "heading", 200.0);
    std::vector<StormSample> track_samples;
    if (hd.contains("tracks")) {
        const fs::path tracks = (base_dir / text(hd, "tracks", "heading")).lexically_normal();
        if (!fs::exists(tracks)) fail("heading.tracks", "file not found: " + tracks.string());
        checked("heading.tracks", [&] {
            track_samples = ingest_samples(read_track_csv(tracks), cfg.region, cfg.heading.h_d_km).samples;
        });
        for (const auto& s : track_samples) cfg.heading.samples.push_back({s.theta, s.weight});
    } else {
        const auto& samples = require(hd, "samples", "heading");
        if (!samples.is_array()) fail("heading.samples", "must be an array of [theta, weight] pairs");
        for (std::size_t k = 0; k < samples.size(); ++k) {
            const auto pair = numbers(samples[k], "heading.samples[" + std::to_string(k) + "]");
            if (pair.size() != 2) fail("heading.samples[" + std::to_string(k) + "]", "must be [theta, weight]");
            cfg.heading.samples.push_back({pair[0], pair[1]});
        }
    }
    checked("heading", [&] { cfg.heading.validate(); });

    const auto& classes = require(doc, "classes", "");
    for (std::size_t c = 0; c < kIntensityCount; ++c) {
        const auto& ic = intensity_classes()[c];
        const std::string path = join("classes", ic.label);
        const auto& j = require(classes, ic.label, "classes");
        auto& m = cfg.classes[c];
        const auto& dp = require(j, "dp", path);
        m.dp = TruncatedWeibull{number(dp, "a", join(path, "dp")), number(dp, "b", join(path, "dp")),
                                number_or(dp, "lower", join(path, "dp"), ic.dp_lower),
                                number_or(dp, "upper", join(path, "dp"), ic.dp_upper)};
        checked(join(path, "dp"), [&] { m.dp.validate(); });
        for (auto [key, target] : {std::pair{"vf", &m.vf}, std::pair{"rmax", &m.rmax}}) {
            const auto& ln = require(j, key, path);
            *target = LognormalMarginal{number(ln, "lambda", join(path, key)), number(ln, "zeta", join(path, key))};
            checked(join(path, key), [&] { target->validate(); });
        }
        if (j.contains("kendall")) m.kendall = parse_kendall(j.at("kendall"), join(path, "kendall"));
    }

    if (doc.contains("intensity_prior")) {
        const auto& ip = doc.at("intensity_prior");
        if (ip.is_string() && ip.get<std::string>() == "weibull") {
        } else if (ip.is_string() && ip.get<std::string>() == "tracks") {
            if (track_samples.empty()) fail("intensity_prior", "'tracks' needs heading.tracks");
            std::array<double, kIntensityCount> p{};
            checked("intensity_prior", [&] { p = intensity_prior(track_samples); });
            cfg.intensity_prior = p;
        } else {
            const auto v = numbers(ip, "intensity_prior");
            if (v.size() != kIntensityCount) fail("intensity_prior", "needs one probability per class");
            double sum = 0.0;
            for (double x : v) {
                if (x < 0.0) fail("intensity_prior", "probabilities must be nonnegative");
                sum += x;
            }
            if (std::abs(sum - 1.0) > 1e-9) fail("intensity_prior", "probabilities must sum to 1");
            cfg.intensity_prior = std::array<double, kIntensityCount>{v[0], v[1], v[2]};
        }
    }

    if (doc.contains("landfall")) {
        const auto& l = doc.at("landfall");
        cfg.landfall.reference_lat = number_or(l, "reference_lat", "landfall", cfg.landfall.reference_lat);
        cfg.landfall.lon_min = number_or(l, "lon_min", "landfall", cfg.landfall.lon_min);
        cfg.landfall.lon_max = number_or(l, "lon_max", "landfall", cfg.landfall.lon_max);
        cfg.landfall.count = count_or(l, "count", "landfall", cfg.landfall.count);
        if (cfg.landfall.count == 0 || !(cfg.landfall.lon_max > cfg.landfall.lon_min))
            fail("landfall", "needs a positive count and lon_min < lon_max");
    }

    const auto& bins = require(doc, "bins", "");
    const double q = number_or(bins, "upper_quantile", "bins", 0.999);
    if (!(q > 0.5 && q < 1.0)) fail("bins.upper_quantile", "must lie in (0.5, 1)");
    cfg.bins.dp = numbers(require(bins, "dp", "bins"), "bins.dp");
    cfg.bins.vf = closed_edges(cfg, bins, "vf_lower", kVf, q);
    cfg.bins.rmax = closed_edges(cfg, bins, "rmax_lower", kRmax, q);
    cfg.bins.theta = numbers(require(bins, "theta", "bins"), "bins.theta");
    cfg.bins.x0_count = cfg.landfall.count;
    checked("bins", [&] { cfg.bins.validate(); });

    const json mcs = doc.value("mcs", json::object());
    cfg.n_joint = count_or(mcs, "n_joint", "mcs", cfg.n_joint);
    cfg.min_joint = count_or(mcs, "min_joint", "mcs", cfg.min_joint);
    if (cfg.n_joint < cfg.min_joint) fail("mcs.n_joint", "must be at least " + std::to_string(cfg.min_joint));
    cfg.mcs.n_sim = count_or(mcs, "n_sim", "mcs", cfg.mcs.n_sim);
    cfg.mcs.n_sim_error = count_or(mcs, "n_sim_error", "mcs", cfg.mcs.n_sim_error);
    cfg.mcs.chunk_size = count_or(mcs, "chunk_size", "mcs", cfg.mcs.chunk_size);
    if (cfg.mcs.n_sim == 0) fail("mcs.n_sim", "must be at least 1");
    if (cfg.mcs.n_sim_error == 0) fail("mcs.n_sim_error", "must be at least 1");
    if (cfg.mcs.chunk_size == 0) fail("mcs.chunk_size", "must be positive");

    const auto& rate = require(doc, "rate", "");
    cfg.rate.lambda = number(rate, "lambda", "rate");
    cfg.rate.s_trk = number(rate, "s_trk", "rate");
    checked("rate", [&] { cfg.rate.validate(); });

    const auto& sites = require(doc, "sites", "");
    if (!sites.is_array() || sites.empty()) fail("sites", "must be a nonempty array");
    for (std::size_t s = 0; s < sites.size(); ++s) {
        const std::string path = "sites[" + std::to_string(s) + "]";
        const auto& j = sites[s];
        SiteSpec site;
        site.name = text(j, "name", path);
        for (const auto& other : cfg.sites)
            if (other.name == site.name) fail(join(path, "name"), "duplicate site name");
        site.synthetic.site_lat = number(j, "lat", path);
        site.synthetic.site_lon = number(j, "lon", path);
        if (j.contains("synthetic")) parse_synthetic(j.at("synthetic"), join(path, "synthetic"), site.synthetic);
        const auto& hz = require(j, "hazards", path);
        for (std::size_t k = 0; k < kHazardCount; ++k)
            site.hazards[k] = parse_hazard(require(hz, kHazardNames[k], join(path, "hazards")),
                                           join(join(path, "hazards"), kHazardNames[k]), base_dir);
        cfg.sites.push_back(std::move(site));
    }

    const json ev = doc.value("evidence", json::object());
    cfg.target_ep = number_or(ev, "target_ep", "evidence", cfg.target_ep);
    if (!(cfg.target_ep > 0.0 && cfg.target_ep <= 1.0)) fail("evidence.target_ep", "must lie in (0, 1]");
    if (ev.contains("standard")) {
        if (!ev.at("standard").is_boolean()) fail("evidence.standard", "must be true or false");
        cfg.standard_cases = ev.at("standard").get<bool>();
    }
    if (ev.contains("thresholds")) {
        const auto& th = ev.at("thresholds");
        if (!th.is_object()) fail("evidence.thresholds", "must map site names to thresholds");
        for (const auto& [name, value] : th.items()) {
            auto it = std::find_if(cfg.sites.begin(), cfg.sites.end(), [&](const SiteSpec& s) { return s.name == name; });
            if (it == cfg.sites.end()) fail(join("evidence.thresholds", name), "unknown site");
            it->thresholds = parse_thresholds(value, join("evidence.thresholds", name));
        }
    }
    if (ev.contains("custom")) {
        const auto& custom = ev.at("custom");
        if (!custom.is_array()) fail("evidence.custom", "must be an array");
        for (std::size_t k = 0; k < custom.size(); ++k) {
            const std::string path = "evidence.custom[" + std::to_string(k) + "]";
            EvidenceCase c{text(custom[k], "label", path), parse_thresholds(custom[k], path)};
            checked(path, [&] { c.validate(); });
            cfg.custom_cases.push_back(std::move(c));
        }
    }

    const json st = doc.value("stacking", json::object());
    cfg.vf_split = number_or(st, "vf_split", "stacking", cfg.vf_split);
    cfg.rmax_split = number_or(st, "rmax_split", "stacking", cfg.rmax_split);
    return cfg;
}

StudyConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
    }
    return parse_config(doc, path.parent_path());
}

void apply_overrides(StudyConfig& cfg, const Overrides& o) {
    if (o.seed) {
        cfg.seed = *o.seed;
        cfg.document["seed"] = *o.seed;
    }
    if (o.threads) cfg.threads = *o.threads;  // does not change results, so not hashed
    if (o.out) cfg.output_dir = *o.out;
}

StormClimatology make_climatology(const StudyConfig& cfg) { return StormClimatology(cfg.classes, cfg.heading); }

// ---------------------------------------------------------------------------
// Build stage

void Telemetry::record(const std::string& stage, double seconds, std::uint64_t cells) {
    stages_[stage] = {{"wall_time_s", seconds}, {"cells", cells}};
}

namespace {

class StageTimer {
public:
    StageTimer(Telemetry* t, std::string name) : t_(t), name_(std::move(name)), start_(Clock::now()) {}
    void done(std::uint64_t cells) {
        if (t_) t_->record(name_, std::chrono::duration<double>(Clock::now() - start_).count(), cells);
    }

private:
    using Clock = std::chrono::steady_clock;
    Telemetry* t_;
    std::string name_;
    Clock::time_point start_;
};

std::unique_ptr<ResponseModel> make_model(const SiteSpec& site, std::size_t k, const LandfallGeometry& geom) {
    const auto& spec = site.hazards[k];
    if (spec.model == "tabulated")
        return std::make_unique<TabulatedModel>(tabulated_model(spec.grid, kHazardNames[k]));
    auto models = synthetic_models(site.synthetic, geom);
    return k == 0 ? std::move(models.surge) : std::move(models.rain);
}

fs::path site_dir(const StudyConfig& cfg, const std::string& site) { return build_dir(cfg) / "sites" / site; }

const std::array<std::pair<std::string, Factor CPTSet::*>, 6> kParameterFiles{{
    {"I", &CPTSet::p_i},
    {"DP", &CPTSet::p_dp},
    {"VF", &CPTSet::p_vf},
    {"RMAX", &CPTSet::p_rmax},
    {"THETA", &CPTSet::p_theta},
    {"X0", &CPTSet::p_x0},
}};

// Row sums of a CPT whose child is the last scope variable.
void check_rows(const Factor& f, const std::string& what) {
    const std::size_t child = f.cardinalities().back();
    const auto& v = f.values();
    for (std::size_t row = 0; row * child < v.size(); ++row) {
        double s = 0.0;
        for (std::size_t c = 0; c < child; ++c) s += v[row * child + c];
        if (std::abs(s - 1.0) > 1e-9)
            throw ValidationError("CPT " + what + " row " + std::to_string(row) + " sums to " + format_number(s));
    }
}

}  // namespace

fs::path build_dir(const StudyConfig& cfg) { return cfg.output_dir / "build"; }
fs::path hazard_dir(const StudyConfig& cfg) { return cfg.output_dir / "hazard"; }
fs::path deagg_dir(const StudyConfig& cfg) { return cfg.output_dir / "deagg"; }

BuildProducts build_products(const StudyConfig& cfg, Telemetry* telemetry) {
    BuildProducts out;
    out.bins = cfg.bins;
    out.geometry = build_landfall(cfg.landfall);
    const auto clim = make_climatology(cfg);

    StageTimer joint_timer(telemetry, "discretize");
    std::vector<DiscreteJointTable> slices;
    DiscretizeOptions dopt;
    dopt.n_samples = cfg.n_joint;
    dopt.min_samples = cfg.min_joint;
    dopt.seed = cfg.seed;
    dopt.threads = cfg.threads;
    for (std::size_t c = 0; c < kIntensityCount; ++c) slices.push_back(discretize_joint(clim, cfg.bins, c, dopt));
    const auto p_i = cfg.intensity_prior ? *cfg.intensity_prior : clim.weibull_class_prior();
    out.cpts = conditionalize(p_i, slices, cfg.bins.x0_count);
    joint_timer.done(cfg.bins.parameter_cells() * kIntensityCount);

    out.report["flagged_rows"] = out.cpts.flagged_rows;
    out.report["intensity_prior"] = p_i;
    for (const auto& [name, member] : kParameterFiles) check_rows(out.cpts.*member, name);

    StageTimer cpt_timer(telemetry, "hazard_cpts");
    std::uint64_t cells = 0;
    for (std::size_t s = 0; s < cfg.sites.size(); ++s) {
        const auto& site = cfg.sites[s];
        std::array<HazardCpts, kHazardCount> hz;
        McsConfig mcs = cfg.mcs;
        mcs.seed = cfg.seed;
        mcs.threads = cfg.threads;
        for (std::size_t k = 0; k < kHazardCount; ++k) {
            const auto& spec = site.hazards[k];
            const auto model = make_model(site, k, out.geometry);
            const std::uint64_t stream = s * kHazardCount + k;
            auto rhat = build_rhat_cpt(*model, cfg.bins, spec.bins, mcs, rhat_node(k), stream);
            auto r = build_r_cpt(spec.error, spec.bins, mcs, rhat_node(k), eps_node(k), r_node(k), stream);
            check_rows(rhat.cpt, site.name + "/" + kHazardNames[k] + " r_hat");
            check_rows(r.cpt, site.name + "/" + kHazardNames[k] + " r");
            json& rep = out.report["sites"][site.name][kHazardNames[k]];
            rep["rhat_clamped_fraction"] = rhat.clamped_fraction();
            rep["r_clamped_fraction"] = r.clamped_fraction();
            rep["r_clamped_high_fraction"] = r.clamped_high_fraction();
            // Low-side clamping of r is the physical floor (no negative rainfall); only
            // the top edge can hide exceedance mass.
            if (rhat.clamped_fraction() > 0.01 || r.clamped_high_fraction() > 0.01) {
                const std::string msg = site.name + "/" + kHazardNames[k] +
                                        ": more than 1% of draws clamped to the edge bins";
                out.report["warnings"].push_back(msg);
                std::cerr << "warning: " << msg << "\n";
            }
            cells += rhat.cpt.size() + r.cpt.size();
            hz[k] = HazardCpts{kHazardNames[k], spec.bins, std::make_shared<const Factor>(std::move(rhat.cpt)),
                               std::make_shared<const Factor>(std::move(r.cpt)), spec.error.bin_masses()};
        }
        out.sites.push_back(std::move(hz));
    }
    cpt_timer.done(cells);
    return out;
}

void save_build(const StudyConfig& cfg, const BuildProducts& p) {
    const fs::path dir = build_dir(cfg);
    fs::create_directories(dir / "parameters");
    for (const auto& [name, member] : kParameterFiles) save_factor(p.cpts.*member, dir / "parameters" / (name + ".json"));
    for (std::size_t s = 0; s < cfg.sites.size(); ++s) {
        const fs::path sd = site_dir(cfg, cfg.sites[s].name);
        fs::create_directories(sd);
        for (std::size_t k = 0; k < kHazardCount; ++k) {
            const auto& h = p.sites[s][k];
            save_factor(*h.rhat, sd / (kHazardNames[k] + "_rhat.json"));
            save_factor(*h.r, sd / (kHazardNames[k] + "_r.json"));
            write_text_atomic(sd / (kHazardNames[k] + "_eps.json"), json(h.eps_masses).dump(2) + "\n");
        }
    }
    json report = p.report;
    report["config_hash"] = cfg.hash();
    write_text_atomic(dir / "build_report.json", report.dump(2) + "\n");
}

BuildProducts load_build(const StudyConfig& cfg) {
    const fs::path dir = build_dir(cfg);
    const fs::path report_file = dir / "build_report.json";
    if (!fs::exists(report_file))
        throw ConfigError("build artifacts missing under " + dir.string() + "; run the build subcommand first");
    BuildProducts out;
    std::ifstream in(report_file);
    out.report = json::parse(in);
    if (out.report.value("config_hash", "") != cfg.hash())
        throw ConfigError("build artifacts under " + dir.string() + " were produced by a different configuration");
    out.bins = cfg.bins;
    out.geometry = build_landfall(cfg.landfall);
    try {
        for (const auto& [name, member] : kParameterFiles)
            out.cpts.*member = load_factor(dir / "parameters" / (name + ".json"));
        out.cpts.flagged_rows = out.report.value("flagged_rows", std::vector<std::string>{});
        for (const auto& site : cfg.sites) {
            const fs::path sd = site_dir(cfg, site.name);
            std::array<HazardCpts, kHazardCount> hz;
            for (std::size_t k = 0; k < kHazardCount; ++k) {
                std::ifstream eps(sd / (kHazardNames[k] + "_eps.json"));
                if (!eps) throw std::runtime_error("missing " + (sd / (kHazardNames[k] + "_eps.json")).string());
                hz[k] = HazardCpts{kHazardNames[k], site.hazards[k].bins,
                                   std::make_shared<const Factor>(load_factor(sd / (kHazardNames[k] + "_rhat.json"))),
                                   std::make_shared<const Factor>(load_factor(sd / (kHazardNames[k] + "_r.json"))),
                                   json::parse(eps).get<std::vector<double>>()};
            }
            out.sites.push_back(std::move(hz));
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("cannot load build artifacts: ") + e.what());
    }
    return out;
}

// ---------------------------------------------------------------------------
// Manifest and output helpers

namespace {

const json kModuleVersions = {{"factor_engine", "1.0.0"}, {"climatology", "1.0.0"}, {"discretizer", "1.0.0"},
                              {"surrogate", "1.0.0"},     {"jpm_hazard", "1.0.0"},  {"deagg", "1.0.0"},
                              {"cli", "1.0.0"}};

void update_manifest(const StudyConfig& cfg, const std::string& command, const Telemetry& t) {
    const fs::path path = cfg.output_dir / "run_manifest.json";
    json m = json::object();
    if (fs::exists(path)) {
        std::ifstream in(path);
        m = json::parse(in, nullptr, false);
        if (m.is_discarded() || !m.is_object() || m.value("config_hash", "") != cfg.hash()) m = json::object();
    }
    m["study"] = cfg.name;
    m["config_hash"] = cfg.hash();
    m["seed"] = cfg.seed;
    m["module_versions"] = kModuleVersions;
    for (const auto& [stage, value] : t.stages().items()) m["stages"][command + "." + stage] = value;
    write_text_atomic(path, m.dump(2) + "\n");
}

class Csv {
public:
    explicit Csv(const std::vector<std::string>& header) {
        for (std::size_t k = 0; k < header.size(); ++k) out_ << (k ? "," : "") << header[k];
        out_ << "\n";
    }
    template <class... T>
    void row(const T&... cells) {
        std::size_t k = 0;
        ((out_ << (k++ ? "," : "") << cell(cells)), ...);
        out_ << "\n";
    }
    void write(const fs::path& path) const { write_text_atomic(path, out_.str()); }

private:
    static std::string cell(double v) { return format_number(v); }
    static std::string cell(std::size_t v) { return std::to_string(v); }
    static std::string cell(const std::string& v) { return v; }
    std::ostringstream out_;
};

void require_normalized(const std::vector<double>& pmf, const std::string& what) {
    double s = 0.0;
    for (double p : pmf) {
        if (!(p >= -1e-15)) throw ValidationError(what + " has a negative entry");
        s += p;
    }
    if (std::abs(s - 1.0) > 1e-9) throw ValidationError(what + " sums to " + format_number(s));
}

void require_nonincreasing(const std::vector<double>& v, const std::string& what) {
    for (std::size_t k = 1; k < v.size(); ++k)
        if (v[k] > v[k - 1] + 1e-12) throw ValidationError(what + " increases at index " + std::to_string(k));
}

std::vector<BinGroup> stacking_groups(const StudyConfig& cfg, StormParam p) {
    switch (p) {
        case kVf: return groups_from_splits(cfg.bins.vf, {cfg.vf_split}, {"vf<" + format_number(cfg.vf_split), "vf>=" + format_number(cfg.vf_split)});
        case kRmax: return groups_from_splits(cfg.bins.rmax, {cfg.rmax_split}, {"rmax<" + format_number(cfg.rmax_split), "rmax>=" + format_number(cfg.rmax_split)});
        default: return default_groups(cfg.bins, p);
    }
}

const std::array<std::pair<StormParam, std::string>, 4> kParamNames{
    {{kDp, "dp"}, {kVf, "vf"}, {kRmax, "rmax"}, {kTheta, "theta"}}};

void write_pmf(const fs::path& path, const std::vector<double>& edges, const std::vector<double>& pmf) {
    Csv csv({"bin", "lower", "upper", "probability"});
    for (std::size_t b = 0; b < pmf.size(); ++b) csv.row(b, edges[b], edges[b + 1], pmf[b]);
    csv.write(path);
}

void write_curve(const fs::path& path, const HazardCurve& c, const HazardCurve* direct) {
    std::vector<std::string> header{"threshold", "exceedance", "annual_rate"};
    if (direct) header.push_back("annual_rate_direct");
    Csv csv(header);
    for (std::size_t e = 0; e < c.thresholds.size(); ++e) {
        if (direct)
            csv.row(c.thresholds[e], c.exceedance[e], c.annual_rate[e], direct->annual_rate[e]);
        else
            csv.row(c.thresholds[e], c.exceedance[e], c.annual_rate[e]);
    }
    csv.write(path);
}

double max_curve_gap(const HazardCurve& a, const HazardCurve& b) {
    double d = 0.0;
    for (std::size_t e = 0; e < a.annual_rate.size(); ++e) d = std::max(d, std::abs(a.annual_rate[e] - b.annual_rate[e]));
    return d;
}

json threshold_json(const std::optional<double>& requested, const std::optional<SnappedThreshold>& t) {
    if (!t) return nullptr;
    return {{"requested", *requested}, {"edge_index", t->edge}, {"value", t->value}, {"snapped", t->snapped}};
}

json means_json(const DeaggregationResult& r) {
    return {{"dp", r.mean_dp},       {"vf", r.mean_vf},
            {"rmax", r.mean_rmax},   {"theta", r.mean_theta},
            {"surge", r.mean_hazard[0]}, {"rainfall", r.mean_hazard[1]}};
}

}  // namespace

// ---------------------------------------------------------------------------
// Subcommands

int cmd_build(const StudyConfig& cfg) {
    Telemetry t;
    const auto products = build_products(cfg, &t);
    StageTimer persist(&t, "persist");
    save_build(cfg, products);
    persist.done(0);
    update_manifest(cfg, "build", t);
    std::cout << "built " << cfg.bins.tcpc_count() << " TCPCs x " << cfg.sites.size() << " site(s) into "
              << build_dir(cfg).string() << "\n";
    return kExitOk;
}

int cmd_hazard(const StudyConfig& cfg, bool oracle) {
    Telemetry t;
    const auto products = load_build(cfg);
    json summary;
    summary["rate"] = {{"lambda", cfg.rate.lambda}, {"s_trk", cfg.rate.s_trk}};
    int status = kExitOk;
    for (std::size_t s = 0; s < cfg.sites.size(); ++s) {
        const auto& site = cfg.sites[s];
        const fs::path dir = hazard_dir(cfg) / site.name;
        fs::create_directories(dir);

        StageTimer curves(&t, site.name + ".curves");
        const auto net = assemble(products.cpts, products.bins, products.sites[s]);
        json& js = summary["sites"][site.name];
        for (std::size_t k = 0; k < kHazardCount; ++k) {
            const auto curve = hazard_curve(net, k, cfg.rate);
            require_nonincreasing(curve.exceedance, site.name + " " + kHazardNames[k] + " exceedance");
            std::optional<HazardCurve> direct;
            if (oracle) {
                direct = direct_jpm_curve(products.cpts, products.bins, products.sites[s][k], cfg.rate, cfg.threads);
                const double gap = max_curve_gap(curve, *direct);
                js[kHazardNames[k]]["max_oracle_gap"] = gap;
                if (gap > 1e-9) {
                    std::cerr << site.name << " " << kHazardNames[k] << ": BN and direct-sum curves differ by "
                              << gap << "\n";
                    status = kExitValidation;
                }
            }
            write_curve(dir / (kHazardNames[k] + "_curve.csv"), curve, direct ? &*direct : nullptr);
        }
        curves.done(products.bins.tcpc_count());

        StageTimer joint(&t, site.name + ".joint");
        const TcpcSpace space(products.cpts, products.bins, products.sites[s], cfg.threads);
        const auto table = joint_hazard(space);
        require_normalized(table.pmf, site.name + " joint PMF");
        if (std::abs(table.pdf_volume() - 1.0) > 1e-9) throw ValidationError(site.name + " joint PDF volume is not 1");
        Csv csv({"eta", "p", "pmf", "pdf", "exceedance"});
        for (std::size_t a = 0; a < table.n1(); ++a)
            for (std::size_t b = 0; b < table.n2(); ++b)
                csv.row(table.r1_edges[a], table.r2_edges[b], table.pmf[a * table.n2() + b],
                        table.pdf[a * table.n2() + b], table.exceedance[a * (table.n2() + 1) + b]);
        csv.write(dir / "joint.csv");
        js["correlation"] = table.correlation;
        js["joint_pdf_volume"] = table.pdf_volume();
        joint.done(space.size());
    }
    write_text_atomic(hazard_dir(cfg) / "summary.json", summary.dump(2) + "\n");
    update_manifest(cfg, "hazard", t);
    return status;
}

SiteEvidence site_evidence(const StudyConfig& cfg, std::size_t s, const DeaggregationResult& prior) {
    const auto& site = cfg.sites.at(s);
    SiteEvidence out;
    std::array<std::optional<double>, kHazardCount> th;
    for (std::size_t k = 0; k < kHazardCount; ++k) {
        const auto edges = site.hazards[k].bins.r_edges();
        if (site.thresholds[k]) {
            const auto snapped = snap_threshold(edges, *site.thresholds[k]);
            const auto exc = exceedance_at_edges(prior.hazard_pmf[k]);
            out.selected[k] = {snapped.edge, snapped.value, exc[snapped.edge],
                               snapped.edge > 0 ? prior.hazard_pmf[k][snapped.edge - 1] : 0.0};
            out.fixed[k] = true;
        } else {
            out.selected[k] = select_threshold(edges, prior.hazard_pmf[k], cfg.target_ep);
        }
        th[k] = out.selected[k].value;
    }
    if (cfg.standard_cases) out.cases = standard_cases(*th[0], *th[1]);
    for (const auto& c : cfg.custom_cases) out.cases.push_back(c);
    return out;
}

EvidenceCase parse_inline_case(const std::string& textual) {
    const auto colon = textual.find(':');
    if (colon == std::string::npos || colon == 0)
        throw ConfigError("evidence '" + textual + "' must look like LABEL:surge=X,rainfall=Y");
    EvidenceCase c;
    c.label = textual.substr(0, colon);
    std::stringstream rest(textual.substr(colon + 1));
    for (std::string item; std::getline(rest, item, ',');) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw ConfigError("evidence term '" + item + "' must be hazard=value");
        const std::string key = item.substr(0, eq);
        std::size_t k = 0;
        while (k < kHazardCount && kHazardNames[k] != key) ++k;
        if (k == kHazardCount) throw ConfigError("evidence term names unknown hazard '" + key + "'");
        try {
            c.thresholds[k] = std::stod(item.substr(eq + 1));
        } catch (const std::exception&) {
            throw ConfigError("evidence value '" + item.substr(eq + 1) + "' is not a number");
        }
    }
    try {
        c.validate();
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    return c;
}

namespace {

void write_bundle(const fs::path& dir, const StudyConfig& cfg, const TcpcSpace& space, const EvidenceCase& c,
                  const DeaggregationResult& r, const DeaggregationResult& prior) {
    fs::create_directories(dir);
    const auto& bins = space.bins();
    // Validate everything before the first write.
    for (const auto& [p, name] : kParamNames) require_normalized(r.pmf(p), c.label + " posterior " + name);
    require_normalized(r.pmf_i, c.label + " posterior I");
    require_normalized(r.pmf_x0, c.label + " posterior x0");
    require_normalized(r.track, c.label + " track joint");
    for (std::size_t k = 0; k < kHazardCount; ++k) require_normalized(r.hazard_pmf[k], c.label + " " + kHazardNames[k]);

    for (const auto& [p, name] : kParamNames) write_pmf(dir / ("posterior_" + name + ".csv"), bins.edges(p), r.pmf(p));
    {
        Csv csv({"class", "probability"});
        for (std::size_t i = 0; i < r.pmf_i.size(); ++i) csv.row(intensity_classes()[i].label, r.pmf_i[i]);
        csv.write(dir / "posterior_intensity.csv");
    }
    {
        Csv csv({"x0", "longitude", "probability"});
        const auto geom = build_landfall(cfg.landfall);
        for (std::size_t x = 0; x < r.pmf_x0.size(); ++x) csv.row(x, geom.longitudes[x], r.pmf_x0[x]);
        csv.write(dir / "posterior_x0.csv");
    }
    {
        Csv csv({"x0", "theta_lower", "theta_upper", "probability"});
        const std::size_t nt = bins.theta.size() - 1;
        for (std::size_t x = 0; x < bins.x0_count; ++x)
            for (std::size_t t = 0; t < nt; ++t) csv.row(x, bins.theta[t], bins.theta[t + 1], r.track[x * nt + t]);
        csv.write(dir / "track_joint.csv");
    }
    for (const auto p : {kDp, kVf, kRmax}) {
        const auto table = stacked_contributions(r, space, p, stacking_groups(cfg, p));
        Csv csv({"x0", "theta_lower", "group", "probability"});
        for (std::size_t x = 0; x < table.n_x0; ++x)
            for (std::size_t t = 0; t < table.n_theta; ++t)
                for (std::size_t g = 0; g < table.group_labels.size(); ++g)
                    csv.row(x, bins.theta[t], table.group_labels[g], table.at(x, t, g));
        csv.write(dir / ("stacked_" + kParamNames[p].second + ".csv"));
    }
    for (std::size_t k = 0; k < kHazardCount; ++k) {
        Csv csv({"lower", "upper", "prior", "posterior"});
        const auto edges = space.hazard(k).bins.r_edges();
        for (std::size_t b = 0; b + 1 < edges.size(); ++b)
            csv.row(edges[b], edges[b + 1], prior.hazard_pmf[k][b], r.hazard_pmf[k][b]);
        csv.write(dir / ("conditional_" + kHazardNames[k] + ".csv"));
    }
    json summary;
    summary["label"] = c.label;
    summary["status"] = "ok";
    summary["evidence_probability"] = r.evidence_probability;
    for (std::size_t k = 0; k < kHazardCount; ++k)
        summary["thresholds"][kHazardNames[k]] = threshold_json(c.thresholds[k], r.thresholds[k]);
    summary["posterior_means"] = means_json(r);
    summary["prior_means"] = means_json(prior);
    write_text_atomic(dir / "summary.json", summary.dump(2) + "\n");
}

}  // namespace

int cmd_deagg(const StudyConfig& cfg, const DeaggOptions& options) {
    Telemetry t;
    const auto products = load_build(cfg);
    int status = kExitOk;
    json index;
    for (std::size_t s = 0; s < cfg.sites.size(); ++s) {
        const auto& site = cfg.sites[s];
        StageTimer timer(&t, site.name);
        const TcpcSpace space(products.cpts, products.bins, products.sites[s], cfg.threads);
        const auto prior = prior_views(space);
        auto ev = site_evidence(cfg, s, prior);
        for (const auto& c : options.inline_cases) ev.cases.push_back(c);
        if (!options.labels.empty())
            std::erase_if(ev.cases, [&](const EvidenceCase& c) {
                return std::find(options.labels.begin(), options.labels.end(), c.label) == options.labels.end();
            });

        // Cases are independent; results land in per-case slots and are written in order.
        std::vector<std::optional<DeaggregationResult>> results(ev.cases.size());
        std::vector<std::string> errors(ev.cases.size());
        parallel_chunks(ev.cases.size(), cfg.threads, [&](std::size_t c) {
            try {
                results[c] = deaggregate(space, ev.cases[c]);
            } catch (const ZeroEvidenceError& e) {
                errors[c] = e.what();
            }
        });

        const fs::path dir = deagg_dir(cfg) / site.name;
        write_bundle(dir / "NoEvidence", cfg, space, EvidenceCase{"NoEvidence", {}}, prior, prior);
        json& js = index["sites"][site.name];
        for (std::size_t k = 0; k < kHazardCount; ++k)
            js["thresholds"][kHazardNames[k]] = {{"value", ev.selected[k].value},
                                                 {"edge_index", ev.selected[k].edge},
                                                 {"no_evidence_exceedance", ev.selected[k].exceedance},
                                                 {"bin_mass_below", ev.selected[k].bin_mass},
                                                 {"source", ev.fixed[k] ? "config" : "target_ep"}};
        js["target_ep"] = cfg.target_ep;
        for (std::size_t c = 0; c < ev.cases.size(); ++c) {
            const auto& ec = ev.cases[c];
            if (!results[c]) {
                std::cerr << site.name << "/" << ec.label << ": " << errors[c] << "\n";
                js["cases"][ec.label] = {{"status", "zero_evidence"}, {"message", errors[c]}};
                fs::create_directories(dir / ec.label);
                write_text_atomic(dir / ec.label / "summary.json",
                                  json{{"label", ec.label}, {"status", "zero_evidence"}, {"message", errors[c]}}.dump(2) + "\n");
                status = kExitZeroEvidence;
                continue;
            }
            write_bundle(dir / ec.label, cfg, space, ec, *results[c], prior);
            js["cases"][ec.label] = {{"status", "ok"}, {"evidence_probability", results[c]->evidence_probability}};
        }
        timer.done(space.size() * (ev.cases.size() + 1));
    }
    write_text_atomic(deagg_dir(cfg) / "index.json", index.dump(2) + "\n");
    update_manifest(cfg, "deagg", t);
    return status;
}

namespace {

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("missing output " + path.string());
    std::vector<std::vector<std::string>> rows;
    for (std::string line; std::getline(in, line);) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
        rows.push_back(std::move(cells));
    }
    if (rows.size() < 2) throw ValidationError(path.string() + " has no data rows");
    return rows;
}

std::vector<double> column(const std::vector<std::vector<std::string>>& rows, const std::string& name,
                           const fs::path& path) {
    const auto& header = rows.front();
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ValidationError(path.string() + " lacks column " + name);
    const auto c = static_cast<std::size_t>(it - header.begin());
    std::vector<double> out;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (c >= rows[r].size()) throw ValidationError(path.string() + " row " + std::to_string(r) + " is short");
        out.push_back(std::stod(rows[r][c]));
    }
    return out;
}

}  // namespace

int cmd_validate(const StudyConfig& cfg) {
    std::size_t checked_files = 0;
    const auto products = load_build(cfg);
    for (std::size_t s = 0; s < cfg.sites.size(); ++s) {
        const auto net = assemble(products.cpts, products.bins, products.sites[s]);
        const auto problems = validate_network(net.net);
        if (!problems.empty()) throw ValidationError(cfg.sites[s].name + " network: " + problems.front());
    }
    for (const auto& site : cfg.sites) {
        const fs::path hd = hazard_dir(cfg) / site.name;
        if (fs::exists(hd)) {
            std::array<std::vector<double>, kHazardCount> marg;
            for (std::size_t k = 0; k < kHazardCount; ++k) {
                const fs::path f = hd / (kHazardNames[k] + "_curve.csv");
                const auto rows = read_csv(f);
                marg[k] = column(rows, "exceedance", f);
                require_nonincreasing(marg[k], f.string());
                if (std::abs(marg[k].front() - 1.0) > 1e-9) throw ValidationError(f.string() + " does not start at 1");
                const auto rate = column(rows, "annual_rate", f);
                for (std::size_t e = 0; e < rate.size(); ++e)
                    if (std::abs(rate[e] - cfg.rate.scale() * marg[k][e]) > 1e-12 * std::max(1.0, rate[e]))
                        throw ValidationError(f.string() + " annual rate is not the scaled exceedance");
                if (rows.front().size() > 3) {
                    const auto direct = column(rows, "annual_rate_direct", f);
                    for (std::size_t e = 0; e < rate.size(); ++e)
                        if (std::abs(rate[e] - direct[e]) > 1e-9) throw ValidationError(f.string() + " oracle column disagrees");
                }
                ++checked_files;
            }
            const fs::path jf = hd / "joint.csv";
            const auto rows = read_csv(jf);
            const auto eta = column(rows, "eta", jf), p = column(rows, "p", jf);
            const auto pmf = column(rows, "pmf", jf), pdf = column(rows, "pdf", jf);
            const auto exc = column(rows, "exceedance", jf);
            require_normalized(pmf, jf.string() + " pmf");
            const auto e1 = site.hazards[0].bins.r_edges(), e2 = site.hazards[1].bins.r_edges();
            const std::size_t n1 = e1.size() - 1, n2 = e2.size() - 1;
            if (pmf.size() != n1 * n2) throw ValidationError(jf.string() + " has the wrong number of rows");
            double volume = 0.0;
            for (std::size_t a = 0; a < n1; ++a)
                for (std::size_t b = 0; b < n2; ++b) {
                    const std::size_t i = a * n2 + b;
                    volume += pdf[i] * (e1[a + 1] - e1[a]) * (e2[b + 1] - e2[b]);
                    const double bound = std::min(marg[0][a], marg[1][b]);
                    if (exc[i] > bound + 1e-12) throw ValidationError(jf.string() + " violates the Frechet bound");
                    if (a > 0 && exc[i] > exc[(a - 1) * n2 + b] + 1e-12)
                        throw ValidationError(jf.string() + " exceedance increases in eta");
                    if (b > 0 && exc[i] > exc[i - 1] + 1e-12) throw ValidationError(jf.string() + " exceedance increases in p");
                }
            if (std::abs(volume - 1.0) > 1e-9) throw ValidationError(jf.string() + " PDF volume is " + format_number(volume));
            ++checked_files;
        }
        const fs::path dd = deagg_dir(cfg) / site.name;
        if (fs::exists(dd)) {
            for (const auto& entry : fs::directory_iterator(dd)) {
                if (!entry.is_directory() || !fs::exists(entry.path() / "posterior_dp.csv")) continue;
                for (const auto& f : fs::directory_iterator(entry.path())) {
                    const auto name = f.path().filename().string();
                    if (f.path().extension() != ".csv") continue;
                    const auto rows = read_csv(f.path());
                    if (name.starts_with("conditional_")) {
                        require_normalized(column(rows, "prior", f.path()), f.path().string());
                        require_normalized(column(rows, "posterior", f.path()), f.path().string());
                    } else {
                        require_normalized(column(rows, "probability", f.path()), f.path().string());
                    }
                    ++checked_files;
                }
            }
        }
    }
    std::cout << "validated build artifacts and " << checked_files << " output files\n";
    return kExitOk;
}

int cmd_oracle_check(const StudyConfig& cfg) {
    const auto products = load_build(cfg);
    int status = kExitOk;
    auto report = [&](const std::string& what, double gap, double tol) {
        const bool ok = gap <= tol;
        std::cout << (ok ? "ok   " : "FAIL ") << what << ": max |diff| = " << gap << " (tol " << tol << ")\n";
        if (!ok) status = kExitValidation;
    };
    constexpr std::size_t kGenericLimit = 10'000;
    for (std::size_t s = 0; s < cfg.sites.size(); ++s) {
        const auto& site = cfg.sites[s];
        const auto net = assemble(products.cpts, products.bins, products.sites[s]);
        for (std::size_t k = 0; k < kHazardCount; ++k) {
            const auto bn = hazard_curve(net, k, cfg.rate);
            const auto direct = direct_jpm_curve(products.cpts, products.bins, products.sites[s][k], cfg.rate, cfg.threads);
            report(site.name + " " + kHazardNames[k] + " BN vs direct sum", max_curve_gap(bn, direct), 1e-9);
        }
        if (products.bins.tcpc_count() > kGenericLimit) {
            std::cout << "skip " << site.name << " generic-engine deaggregation check ("
                      << products.bins.tcpc_count() << " TCPCs)\n";
            continue;
        }
        const TcpcSpace space(products.cpts, products.bins, products.sites[s], cfg.threads);
        const auto prior = prior_views(space);
        const auto ev = site_evidence(cfg, s, prior);
        for (const auto& c : ev.cases) {
            AssembleOptions opts;
            opts.thresholds = c.thresholds;
            const auto enet = assemble(products.cpts, products.bins, products.sites[s], opts);
            Evidence e;
            for (std::size_t k = 0; k < kHazardCount; ++k)
                if (c.thresholds[k]) e[evidence_node(k)] = 1;
            DeaggregationResult r;
            try {
                r = deaggregate(space, c);
            } catch (const ZeroEvidenceError&) {
                std::cout << "skip " << site.name << "/" << c.label << " (zero evidence)\n";
                continue;
            }
            double gap = 0.0;
            const std::array<std::pair<std::string, const std::vector<double>*>, 8> views{{
                {node::kI, &r.pmf_i}, {node::kDp, &r.pmf_dp}, {node::kVf, &r.pmf_vf}, {node::kRmax, &r.pmf_rmax},
                {node::kTheta, &r.pmf_theta}, {node::kX0, &r.pmf_x0}, {r_node(0), &r.hazard_pmf[0]},
                {r_node(1), &r.hazard_pmf[1]},
            }};
            for (const auto& [id, pmf] : views) {
                const auto q = query(enet.net, {id}, e);
                for (std::size_t b = 0; b < pmf->size(); ++b) gap = std::max(gap, std::abs(q.posterior.values()[b] - (*pmf)[b]));
                gap = std::max(gap, std::abs(q.evidence_probability - r.evidence_probability));
            }
            report(site.name + " " + c.label + " specialized vs generic posteriors", gap, 1e-10);
        }
    }
    return status;
}

}  // namespace jpmbn
