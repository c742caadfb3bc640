#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "jpmbn/climatology.hpp"
#include "jpmbn/factor.hpp"
#include "jpmbn/network.hpp"

namespace jpmbn {

/// Node ids of the assembled hazard network.
namespace node {
inline const std::string kI = "I";
inline const std::string kDp = "DP";
inline const std::string kVf = "VF";
inline const std::string kRmax = "RMAX";
inline const std::string kTheta = "THETA";
inline const std::string kX0 = "X0";
}  // namespace node

/// Bin edges for the continuous storm parameters (n bins = n + 1 edges) and the
/// number of landfall representatives. Edges are closed at both ends for
/// uniform in-bin sampling; tallies fold values beyond the outer edges into the
/// first and last bins.
struct BinScheme {
    std::vector<double> dp;
    std::vector<double> vf;
    std::vector<double> rmax;
    std::vector<double> theta;
    std::size_t x0_count = 14;

    void validate() const;
    const std::vector<double>& edges(StormParam p) const;
    std::array<std::size_t, kStormParamCount> shape() const;
    std::size_t parameter_cells() const;  ///< product of the four continuous bin counts
    std::size_t tcpc_count() const { return parameter_cells() * x0_count; }
};

/// Appends `upper` as the last edge when given lower edges only.
std::vector<double> close_edges(std::vector<double> lower_edges, double upper);

/// Bin holding x; values outside the outer edges map to the first or last bin.
std::size_t locate_bin(std::span<const double> edges, double x);

/// "[a, b)" style labels for a bin vector.
std::vector<std::string> bin_labels(std::span<const double> edges, int precision = 6);

/// Monte-Carlo estimate of the class-conditional probabilities of every
/// (dp, vf, rmax, theta) cell.
struct DiscreteJointTable {
    std::size_t intensity = 0;
    std::array<std::size_t, kStormParamCount> shape{};
    std::uint64_t n_samples = 0;
    std::vector<std::uint64_t> counts;
    std::vector<double> prob;

    std::size_t index(std::size_t dp, std::size_t vf, std::size_t rmax, std::size_t theta) const {
        return ((dp * shape[1] + vf) * shape[2] + rmax) * shape[3] + theta;
    }
    /// Binomial standard error sqrt(p (1 - p) / n) of a cell.
    double std_error(std::size_t cell) const;
    /// 1-D marginal obtained by summing over the other three parameters.
    std::vector<double> marginal(StormParam p) const;
};

struct DiscretizeOptions {
    std::uint64_t n_samples = 1'000'000;
    std::uint64_t seed = 1;
    std::size_t threads = 0;
    std::size_t chunk_size = 1 << 16;
    std::uint64_t min_samples = 100'000;
};

DiscreteJointTable discretize_joint(const StormClimatology& clim, const BinScheme& bins,
                                    std::size_t cls, const DiscretizeOptions& options);

/// Parameter-node CPTs of the network.
struct CPTSet {
    Factor p_i;          ///< [I]
    Factor p_dp;         ///< [I, DP]
    Factor p_vf;         ///< [DP, VF]
    Factor p_rmax;       ///< [DP, VF, RMAX]
    Factor p_theta;      ///< [DP, VF, RMAX, THETA]
    Factor p_x0;         ///< [X0]
    std::vector<std::string> flagged_rows;  ///< parent combinations with zero mass

    /// Network over I, DP, VF, RMAX, THETA, X0 only.
    DiscreteNetwork to_network(const BinScheme& bins) const;
};

/// Conditionals of the joint p(i) p(dp, vf, rmax, theta | i) by ratio of
/// joint-slice sums. Zero-mass parent rows become uniform and are flagged.
CPTSet conditionalize(const std::array<double, kIntensityCount>& p_i,
                      const std::vector<DiscreteJointTable>& slices, std::size_t x0_count);

struct LandfallConfig {
    double reference_lat = 29.5;
    double lon_min = -93.0;
    double lon_max = -86.0;
    std::size_t count = 14;
};

/// Straight-line track through a landfall representative.
struct TrackLine {
    double lat0;
    double lon0;
    double heading_deg;  ///< clockwise from north

    /// Signed distance (km) of a point from the track line; positive to the right of travel.
    double cross_track_km(double lat, double lon) const;
    /// Distance (km) of the point's projection along the direction of travel.
    double along_track_km(double lat, double lon) const;
};

struct LandfallGeometry {
    LandfallConfig config;
    std::vector<double> longitudes;  ///< representative points on the reference line

    double spacing_deg() const;
    TrackLine track(std::size_t x0, double heading_deg) const;
};

/// Representatives at the centres of equal segments of the reference line.
LandfallGeometry build_landfall(const LandfallConfig& config = {});
/// Uniform p(x0).
Factor landfall_prior(const LandfallGeometry& geom);

}  // namespace jpmbn
