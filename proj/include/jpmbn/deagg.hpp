#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "jpmbn/jpm_hazard.hpp"

namespace jpmbn {

/// Hazard thresholds entered as evidence; E_k = true means R_k >= threshold.
struct EvidenceCase {
    std::string label;
    std::array<std::optional<double>, kHazardCount> thresholds;

    void validate() const;
};

/// EC1 (surge only), EC2 (rainfall only) and EC3 (both).
std::vector<EvidenceCase> standard_cases(double surge_threshold, double rain_threshold);

struct DeaggregationResult {
    std::string label;
    std::array<std::optional<SnappedThreshold>, kHazardCount> thresholds;
    double evidence_probability = 1.0;

    std::vector<double> posterior;  ///< p(x | e) over the TCPC space
    std::vector<double> pmf_i, pmf_dp, pmf_vf, pmf_rmax, pmf_theta, pmf_x0;
    std::vector<double> track;  ///< p(x0, theta | e), x0 rows
    /// p(r_k | e); for an evidenced hazard this is zero below its threshold.
    std::array<std::vector<double>, kHazardCount> hazard_pmf;

    double mean_dp = 0, mean_vf = 0, mean_rmax = 0, mean_theta = 0;
    std::array<double, kHazardCount> mean_hazard{};

    const std::vector<double>& pmf(StormParam p) const;
};

/// Posterior views with no evidence entered.
DeaggregationResult prior_views(const TcpcSpace& space);

/// p(x | e) ∝ p(x) prod_k P(E_k | x) and every view derived from it.
/// Throws ZeroEvidenceError when P(e) = 0.
DeaggregationResult deaggregate(const TcpcSpace& space, const EvidenceCase& evidence);

/// Named set of parameter bins.
struct BinGroup {
    std::string label;
    std::vector<std::size_t> bins;
};

/// Groups bins by lower edge against ascending split values: group g holds the
/// bins with splits[g-1] <= lower edge < splits[g].
std::vector<BinGroup> groups_from_splits(const std::vector<double>& edges, const std::vector<double>& splits,
                                         const std::vector<std::string>& labels);

/// Default stacking partitions: intensity classes for dp, 25 km/hr for vf, 60 km for rmax.
std::vector<BinGroup> default_groups(const BinScheme& bins, StormParam param);

struct StackedTable {
    StormParam param;
    std::vector<std::string> group_labels;
    std::size_t n_x0 = 0, n_theta = 0;
    std::vector<double> values;  ///< [x0][theta][group]

    double at(std::size_t x0, std::size_t theta, std::size_t g) const {
        return values[(x0 * n_theta + theta) * group_labels.size() + g];
    }
};

/// p(x0, theta, group | e). Throws std::invalid_argument unless the groups
/// cover every bin of `param` exactly once.
StackedTable stacked_contributions(const DeaggregationResult& result, const TcpcSpace& space,
                                   StormParam param, const std::vector<BinGroup>& groups);

/// sum_x p(r_k | x) w(x): the PMF of hazard k under TCPC weights w, which is
/// p(r_k | e) when w = p(x | e) and hazard k carries no evidence.
std::vector<double> conditional_hazard(const TcpcSpace& space, const std::vector<double>& posterior,
                                       std::size_t k);

struct ThresholdSelection {
    std::size_t edge = 0;
    double value = 0.0;
    double exceedance = 0.0;  ///< achieved no-evidence exceedance
    double bin_mass = 0.0;    ///< mass of the bin just below the edge
};

/// Smallest edge whose exceedance is <= target_ep, target_ep in (0, 1].
ThresholdSelection select_threshold(const std::vector<double>& r_edges, const std::vector<double>& pmf,
                                    double target_ep);
ThresholdSelection select_threshold(const AssembledNetwork& net, std::size_t k, double target_ep);

/// Mean of a bin PMF using bin midpoints.
double midpoint_mean(const std::vector<double>& edges, const std::vector<double>& pmf);

}  // namespace jpmbn
