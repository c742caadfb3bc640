#pragma once

#include <array>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "jpmbn/discretizer.hpp"
#include "jpmbn/network.hpp"
#include "jpmbn/surrogate.hpp"

namespace jpmbn {

inline constexpr std::size_t kHazardCount = 2;

/// Node ids for hazard k (0 = surge, 1 = rainfall).
std::string rhat_node(std::size_t k);
std::string eps_node(std::size_t k);
std::string r_node(std::size_t k);
std::string evidence_node(std::size_t k);
inline const std::string kJointNode = "J";

struct RateConfig {
    double lambda = 1.0;  ///< storms / year / km
    double s_trk = 1.0;   ///< track spacing, km

    void validate() const;
    double scale() const { return lambda * s_trk; }
};

/// Everything the network needs for one hazard at one site.
struct HazardCpts {
    std::string name;
    ResponseBinScheme bins;
    std::shared_ptr<const Factor> rhat;  ///< [DP, VF, RMAX, THETA, X0, RHATk]
    std::shared_ptr<const Factor> r;     ///< [RHATk, EPSk, Rk]
    std::vector<double> eps_masses;
};

struct SnappedThreshold {
    std::size_t edge = 0;  ///< index into the r edges
    double value = 0.0;
    bool snapped = false;  ///< requested value was not on an edge
};

/// Nearest r bin edge to `r_star`.
SnappedThreshold snap_threshold(const std::vector<double>& r_edges, double r_star);

struct AssembleOptions {
    std::array<std::optional<double>, kHazardCount> thresholds;  ///< adds E nodes when set
    bool joint_node = false;  ///< materialize J over (R1, R2) with identity CPT
};

struct AssembledNetwork {
    DiscreteNetwork net;
    std::array<std::vector<double>, kHazardCount> r_edges;
    std::array<std::optional<SnappedThreshold>, kHazardCount> thresholds;
    std::vector<std::string> reports;
};

/// Wires the full network: I, DP, VF, RMAX, THETA, X0, RHAT1/2, EPS1/2, R1/2,
/// plus E1/E2 (true iff the R bin's lower edge >= threshold) and optionally J.
AssembledNetwork assemble(const CPTSet& cpts, const BinScheme& bins,
                          const std::array<HazardCpts, kHazardCount>& hazards,
                          const AssembleOptions& options = {});

struct HazardCurve {
    std::vector<double> thresholds;  ///< every r bin edge
    std::vector<double> exceedance;  ///< P(R in bins with lower edge >= threshold)
    std::vector<double> annual_rate;
};

/// Tail sums of a bin PMF at every edge: out[e] = sum_{k >= e} pmf[k]; out[n] = 0.
std::vector<double> exceedance_at_edges(const std::vector<double>& pmf);

/// Marginal PMF of R_k by exact inference on the network.
std::vector<double> hazard_pmf(const AssembledNetwork& net, std::size_t hazard);
HazardCurve hazard_curve(const AssembledNetwork& net, std::size_t hazard, const RateConfig& rate);

/// Annual exceedance rate by explicit summation over every TCPC, epsilon bin and
/// r_hat bin, independent of the inference engine.
double direct_jpm_sum(const CPTSet& cpts, const BinScheme& bins, const HazardCpts& hazard,
                      const RateConfig& rate, double r_star);
/// Same summation evaluated at every r edge.
HazardCurve direct_jpm_curve(const CPTSet& cpts, const BinScheme& bins, const HazardCpts& hazard,
                             const RateConfig& rate, std::size_t threads = 0);

/// Enumerated TCPC space: p(x) for every (dp, vf, rmax, theta, x0) cell and the
/// per-cell response distributions of both hazards.
class TcpcSpace {
public:
    TcpcSpace(const CPTSet& cpts, const BinScheme& bins,
              std::array<HazardCpts, kHazardCount> hazards, std::size_t threads = 0);

    std::size_t size() const { return prior_.size(); }
    const BinScheme& bins() const { return bins_; }
    const CPTSet& cpts() const { return cpts_; }
    const HazardCpts& hazard(std::size_t k) const { return hazards_.at(k); }
    std::size_t threads() const { return threads_; }

    /// p(x) over TCPCs, index order (dp, vf, rmax, theta, x0).
    const std::vector<double>& prior() const { return prior_; }
    std::array<std::size_t, 5> decode(std::size_t x) const;

    /// Q_k[h][r] = sum_eps p(eps) p(r | r_hat = h, eps), row-major.
    const std::vector<double>& response_kernel(std::size_t k) const { return kernel_.at(k); }
    /// p(r_k | x) into `out` (length r_bins).
    void response_given(std::size_t k, std::size_t x, std::span<double> out) const;
    /// P(E_k = true | x) for a threshold at r edge `edge`.
    std::vector<double> likelihood(std::size_t k, std::size_t edge) const;

private:
    CPTSet cpts_;
    BinScheme bins_;
    std::array<HazardCpts, kHazardCount> hazards_;
    std::size_t threads_;
    std::vector<double> prior_;
    std::array<std::vector<double>, kHazardCount> kernel_;
};

/// Joint distribution of the two hazards on their r bins.
struct JointHazardTable {
    std::vector<double> r1_edges, r2_edges;
    std::vector<double> pmf;         ///< n1 x n2, row-major (R1 rows)
    std::vector<double> pdf;         ///< pmf / bin area
    std::vector<double> exceedance;  ///< (n1 + 1) x (n2 + 1): P(R1 >= edge_a and R2 >= edge_b)
    double correlation = 0.0;        ///< Pearson correlation from bin midpoints

    std::size_t n1() const { return r1_edges.size() - 1; }
    std::size_t n2() const { return r2_edges.size() - 1; }
    double pdf_volume() const;
};

/// Builds the derived surfaces from a joint PMF.
JointHazardTable joint_table_from_pmf(std::vector<double> r1_edges, std::vector<double> r2_edges,
                                      std::vector<double> pmf);

/// Joint PMF by TCPC enumeration, sum_x p(x) p(r1|x) p(r2|x).
JointHazardTable joint_hazard(const TcpcSpace& space);
/// Joint PMF read from the J node of a network assembled with `joint_node`.
JointHazardTable joint_hazard(const AssembledNetwork& net);

}  // namespace jpmbn
