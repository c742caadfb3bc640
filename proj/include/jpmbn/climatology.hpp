#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "jpmbn/copula.hpp"
#include "jpmbn/distributions.hpp"
#include "jpmbn/heading.hpp"

namespace jpmbn {

inline constexpr std::size_t kIntensityCount = 3;

/// Intensity partition on central pressure deficit (hPa): LI, MI, HI.
struct IntensityClass {
    std::string label;
    double dp_lower;
    double dp_upper;
};

/// LI = [8, 28), MI = [28, 48), HI = [48, 148].
const std::array<IntensityClass, kIntensityCount>& intensity_classes();
/// Index of the class containing `dp`; throws outside [8, 148].
std::size_t intensity_of(double dp);

/// Copula variable order.
enum StormParam : std::size_t { kDp = 0, kVf = 1, kRmax = 2, kTheta = 3 };
inline constexpr std::size_t kStormParamCount = 4;

/// Marginals and Kendall matrix for one intensity class.
struct ClassModel {
    TruncatedWeibull dp;
    LognormalMarginal vf;    ///< km/hr
    LognormalMarginal rmax;  ///< km
    Eigen::Matrix4d kendall = Eigen::Matrix4d::Identity();  ///< over (dp, vf, rmax, theta)
};

struct StormDraw {
    double dp;
    double vf;
    double rmax;
    double theta;
};

/// f(dp, vf, rmax, theta | i): per-class marginals tied by a Meta-Gaussian copula.
class StormClimatology {
public:
    StormClimatology(std::array<ClassModel, kIntensityCount> classes, DirectionalModel heading);

    const ClassModel& model(std::size_t cls) const { return classes_.at(cls); }
    const DirectionalModel& heading() const { return heading_; }
    const HeadingCdf& heading_cdf() const { return heading_cdf_; }
    const PearsonMatrix& pearson(std::size_t cls) const { return pearson_.at(cls); }

    /// CDF of one parameter's marginal within class `cls`.
    double marginal_cdf(std::size_t cls, StormParam p, double x) const;
    double marginal_quantile(std::size_t cls, StormParam p, double u) const;

    /// One joint draw using the caller's engine.
    StormDraw draw(std::size_t cls, std::mt19937_64& rng) const;

    /// p(i) proportional to the untruncated Weibull mass of each class interval.
    std::array<double, kIntensityCount> weibull_class_prior() const;

private:
    std::array<ClassModel, kIntensityCount> classes_;
    DirectionalModel heading_;
    HeadingCdf heading_cdf_;
    std::array<PearsonMatrix, kIntensityCount> pearson_;
    std::vector<GaussianCopula> copulas_;
};

/// Engine for stream `stream` of a run seeded with `seed`.
std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream = 0);

/// n joint draws for class `cls`; deterministic for a fixed (seed, stream).
std::vector<StormDraw> sample_joint(const StormClimatology& clim, std::size_t cls, std::size_t n,
                                    std::uint64_t seed, std::uint64_t stream = 0);

struct StudyRegion {
    double crl_lat = 29.58;
    double crl_lon = -89.54;
    double capture_radius_km = 600.0;
};

/// One row of a storm-track file.
struct TrackRow {
    std::string storm_id;
    std::string timestamp;
    double lat;
    double lon;
    double dp_hpa;
    double vf_kmh;
    double rmax_km;
    double theta_deg;
};

struct StormSample {
    std::string storm_id;
    double dp;
    double vf;
    double rmax;
    double theta;
    double distance_to_crl;  ///< km
    double weight;
};

struct IngestResult {
    std::vector<StormSample> samples;
    std::vector<std::string> skipped_storms;  ///< no track point inside the capture zone
};

/// Columns: storm_id, timestamp, lat, lon, dp_hpa, vf_kmh, rmax_km, theta_deg.
std::vector<TrackRow> read_track_csv(const std::filesystem::path& path);

double great_circle_km(double lat1, double lon1, double lat2, double lon2);

/// Maximum-dp in-zone track point per storm, weighted by exp(-(d/h_d)^2 / 2).
IngestResult ingest_samples(const std::vector<TrackRow>& rows, const StudyRegion& region,
                            double h_d_km);

/// Weighted fraction of samples per intensity class.
std::array<double, kIntensityCount> intensity_prior(const std::vector<StormSample>& samples);

}  // namespace jpmbn
