#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "jpmbn/discretizer.hpp"
#include "jpmbn/factor.hpp"

namespace jpmbn {

struct StormInput {
    double dp;     ///< hPa
    double vf;     ///< km/hr
    double rmax;   ///< km
    double theta;  ///< degrees clockwise from north
    std::size_t x0;
};

/// Predicted hazard response r_hat(x) for one hazard at one site.
class ResponseModel {
public:
    virtual ~ResponseModel() = default;
    virtual std::string hazard() const = 0;
    virtual double predict(const StormInput& x) const = 0;
    /// False when the model only knows discrete heading levels; CPT construction
    /// then evaluates it at each heading bin's lower edge.
    virtual bool continuous_heading() const { return true; }
};

/// Piecewise-linear function with flat extrapolation.
struct PiecewiseLinear {
    std::vector<double> x;
    std::vector<double> y;

    void validate(const std::string& field) const;
    double operator()(double v) const;
};

/// Standard-normal residual bins and the severity-dependent standard deviation.
struct ErrorModel {
    std::vector<double> epsilon_edges{-INFINITY, -3, -2, -1, 0, 1, 2, 3, INFINITY};
    PiecewiseLinear sigma_c;

    std::size_t bin_count() const { return epsilon_edges.size() - 1; }
    /// Phi(upper) - Phi(lower) per bin.
    std::vector<double> bin_masses() const;
    void validate(const std::string& field = "sigma_c") const;
};

/// Equal-width bins for predicted (r_hat) and actual (r) response.
struct ResponseBinScheme {
    double rhat_lo = 0.0, rhat_hi = 1.0;
    std::size_t rhat_bins = 40;
    double r_lo = 0.0, r_hi = 1.0;
    std::size_t r_bins = 80;

    void validate() const;
    std::vector<double> rhat_edges() const;
    std::vector<double> r_edges() const;
};

struct McsConfig {
    std::size_t n_sim = 100;          ///< draws per parent combination of the r_hat CPT
    std::size_t n_sim_error = 2000;   ///< draws per (r_hat, epsilon) row of the r CPT
    std::uint64_t seed = 1;
    std::size_t chunk_size = 256;     ///< parent rows per seeded substream
    std::size_t threads = 0;
};

struct CptBuild {
    Factor cpt;
    std::uint64_t draws = 0;
    std::uint64_t clamped = 0;  ///< predictions outside the bin range, clamped to edge bins
    std::uint64_t clamped_high = 0;  ///< the subset above the top edge (biases exceedance tails)

    double clamped_fraction() const {
        return draws ? static_cast<double>(clamped) / static_cast<double>(draws) : 0.0;
    }
    double clamped_high_fraction() const {
        return draws ? static_cast<double>(clamped_high) / static_cast<double>(draws) : 0.0;
    }
};

/// p(r_hat | dp, vf, rmax, theta, x0) by uniform in-bin Monte-Carlo.
/// Scope [DP, VF, RMAX, THETA, X0, rhat_id].
CptBuild build_rhat_cpt(const ResponseModel& model, const BinScheme& bins,
                        const ResponseBinScheme& rbins, const McsConfig& cfg,
                        const std::string& rhat_id, std::uint64_t stream = 0);

/// p(r | r_hat, eps) for r = r_hat + eps * sigma_c(r_hat) with r_hat uniform in its
/// bin and eps from the standard normal truncated to its bin. Scope [rhat_id, eps_id, r_id].
CptBuild build_r_cpt(const ErrorModel& err, const ResponseBinScheme& rbins, const McsConfig& cfg,
                     const std::string& rhat_id, const std::string& eps_id, const std::string& r_id,
                     std::uint64_t stream = 0);

/// Coefficients of the analytic stand-in surge and rainfall models.
struct SyntheticParams {
    double site_lat = 29.91;
    double site_lon = -90.10;
    // surge (m)
    double surge_scale = 3.0;
    double surge_dp_exp = 1.1;
    double surge_vf_gain = 0.35;
    double surge_rmax_peak = 45.0;
    double surge_track_offset_km = 30.0;
    double surge_track_width_km = 90.0;
    double surge_floor = 0.15;
    double surge_offset = -0.3;
    // rainfall (mm)
    double rain_scale = 35.0;
    double rain_dp_exp = 0.6;
    double rain_vf_exp = 0.8;
    double rain_rmax_exp = 0.3;
    double rain_track_width_km = 140.0;
    double rain_floor = 0.2;
};

/// Surge: increasing in dp and vf, unimodal in rmax, peaked for tracks passing
/// just left of the site (site on the right of travel).
class SyntheticSurgeModel final : public ResponseModel {
public:
    SyntheticSurgeModel(SyntheticParams p, LandfallGeometry geom);
    std::string hazard() const override { return "surge"; }
    double predict(const StormInput& x) const override;

private:
    SyntheticParams p_;
    LandfallGeometry geom_;
};

/// Rainfall: increasing in dp, decreasing in vf, peaked for tracks crossing the site.
class SyntheticRainModel final : public ResponseModel {
public:
    SyntheticRainModel(SyntheticParams p, LandfallGeometry geom);
    std::string hazard() const override { return "rainfall"; }
    double predict(const StormInput& x) const override;

private:
    SyntheticParams p_;
    LandfallGeometry geom_;
};

struct SyntheticModels {
    std::unique_ptr<ResponseModel> surge;
    std::unique_ptr<ResponseModel> rain;
};
SyntheticModels synthetic_models(const SyntheticParams& params, const LandfallGeometry& geom);

class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Response values on a (dp, vf, rmax) grid at each categorical (theta, x0) level,
/// interpolated multilinearly.
class TabulatedModel final : public ResponseModel {
public:
    TabulatedModel(std::string hazard, std::vector<double> dp, std::vector<double> vf,
                   std::vector<double> rmax,
                   std::map<std::pair<double, std::size_t>, std::vector<double>> levels);

    std::string hazard() const override { return hazard_; }
    double predict(const StormInput& x) const override;
    bool continuous_heading() const override { return false; }

    const std::vector<double>& dp_knots() const { return dp_; }
    const std::vector<double>& vf_knots() const { return vf_; }
    const std::vector<double>& rmax_knots() const { return rmax_; }

private:
    std::string hazard_;
    std::vector<double> dp_, vf_, rmax_;
    std::map<std::pair<double, std::size_t>, std::vector<double>> levels_;
};

/// Reads a CSV with columns dp, vf, rmax, theta, x0, value.
TabulatedModel tabulated_model(const std::filesystem::path& grid_file, const std::string& hazard);

}  // namespace jpmbn
