#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "jpmbn/climatology.hpp"
#include "jpmbn/deagg.hpp"
#include "jpmbn/discretizer.hpp"
#include "jpmbn/jpm_hazard.hpp"
#include "jpmbn/surrogate.hpp"

namespace jpmbn {

/// Invalid or incomplete study configuration (exit code 2).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An emitted or computed quantity failed a numerical check (exit code 3).
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitValidation = 3;
inline constexpr int kExitZeroEvidence = 4;

/// Hazard names in network order.
inline const std::array<std::string, kHazardCount> kHazardNames{"surge", "rainfall"};

struct HazardSpec {
    std::string model = "synthetic";  ///< synthetic | tabulated
    std::filesystem::path grid;       ///< tabulated grid CSV
    ResponseBinScheme bins;
    ErrorModel error;
};

struct SiteSpec {
    std::string name;
    SyntheticParams synthetic;  ///< site_lat / site_lon carry the site location
    std::array<HazardSpec, kHazardCount> hazards;
    std::array<std::optional<double>, kHazardCount> thresholds;  ///< fixed evidence thresholds
};

struct StudyConfig {
    std::string name;
    std::filesystem::path output_dir;
    std::uint64_t seed = 1;
    std::size_t threads = 0;

    StudyRegion region;
    DirectionalModel heading;
    std::array<ClassModel, kIntensityCount> classes;
    std::optional<std::array<double, kIntensityCount>> intensity_prior;  ///< unset: Weibull class mass
    BinScheme bins;
    LandfallConfig landfall;
    std::uint64_t n_joint = 1'000'000;
    std::uint64_t min_joint = 100'000;
    McsConfig mcs;
    RateConfig rate;
    std::vector<SiteSpec> sites;

    double target_ep = 0.03;
    bool standard_cases = true;
    std::vector<EvidenceCase> custom_cases;
    double vf_split = 25.0;
    double rmax_split = 60.0;

    nlohmann::json document;  ///< effective configuration, overrides applied
    std::string hash() const;  ///< FNV-1a of the canonical document
};

/// Parses and validates; relative paths resolve against `base_dir`.
/// Throws ConfigError naming the offending field.
StudyConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);
StudyConfig load_config(const std::filesystem::path& path);

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> threads;
    std::optional<std::filesystem::path> out;
};
void apply_overrides(StudyConfig& cfg, const Overrides& o);

StormClimatology make_climatology(const StudyConfig& cfg);

/// Everything the build stage produces.
struct BuildProducts {
    BinScheme bins;
    LandfallGeometry geometry;
    CPTSet cpts;
    std::vector<std::array<HazardCpts, kHazardCount>> sites;
    nlohmann::json report;  ///< flagged rows, clamping telemetry
};

/// Per-stage timing and work counts collected into the run manifest.
class Telemetry {
public:
    void record(const std::string& stage, double seconds, std::uint64_t cells);
    const nlohmann::json& stages() const { return stages_; }

private:
    nlohmann::json stages_ = nlohmann::json::object();
};

BuildProducts build_products(const StudyConfig& cfg, Telemetry* telemetry = nullptr);
void save_build(const StudyConfig& cfg, const BuildProducts& products);
/// Reloads persisted build artifacts; throws ConfigError when they are missing.
BuildProducts load_build(const StudyConfig& cfg);

std::filesystem::path build_dir(const StudyConfig& cfg);
std::filesystem::path hazard_dir(const StudyConfig& cfg);
std::filesystem::path deagg_dir(const StudyConfig& cfg);

/// Evidence cases for a site: EC1-EC3 from fixed or selected thresholds plus custom cases.
struct SiteEvidence {
    std::array<ThresholdSelection, kHazardCount> selected;
    std::array<bool, kHazardCount> fixed{};
    std::vector<EvidenceCase> cases;
};
SiteEvidence site_evidence(const StudyConfig& cfg, std::size_t site, const DeaggregationResult& prior);

/// Parses "LABEL:surge=X,rainfall=Y".
EvidenceCase parse_inline_case(const std::string& text);

struct DeaggOptions {
    std::vector<std::string> labels;  ///< empty: all cases
    std::vector<EvidenceCase> inline_cases;
};

/// Subcommands. Each returns a process exit code.
int cmd_build(const StudyConfig& cfg);
int cmd_hazard(const StudyConfig& cfg, bool oracle);
int cmd_deagg(const StudyConfig& cfg, const DeaggOptions& options);
int cmd_validate(const StudyConfig& cfg);
int cmd_oracle_check(const StudyConfig& cfg);

/// Numbers in emitted files: shortest round-trip decimal form.
std::string format_number(double v);

}  // namespace jpmbn
