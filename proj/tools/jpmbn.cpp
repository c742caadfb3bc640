// Command-line driver for the multi-hazard JPM network.

#include <iostream>

#include <CLI11.hpp>

#include "jpmbn/network.hpp"
#include "jpmbn/study.hpp"

int main(int argc, char** argv) {
    using namespace jpmbn;

    CLI::App app{"Joint-probability multi-hazard assessment with a discrete Bayesian network"};
    app.require_subcommand(1);

    std::string config_path;
    Overrides overrides;
    std::uint64_t seed = 0;
    std::size_t threads = 0;
    std::string out;
    app.add_option("--config", config_path, "study configuration (JSON)")->required();
    auto* seed_opt = app.add_option("--seed", seed, "override the configured seed");
    auto* threads_opt = app.add_option("--threads", threads, "worker threads (0 = all cores)");
    auto* out_opt = app.add_option("--out", out, "override the output directory");

    auto* build = app.add_subcommand("build", "build and persist all CPTs");
    auto* hazard = app.add_subcommand("hazard", "hazard curves and joint surfaces");
    bool oracle = false;
    hazard->add_flag("--oracle", oracle, "add the direct-summation column and compare");
    auto* deagg = app.add_subcommand("deagg", "deaggregation under evidence cases");
    DeaggOptions dopt;
    std::vector<std::string> inline_cases;
    deagg->add_option("--case", dopt.labels, "only these case labels");
    deagg->add_option("--evidence", inline_cases, "extra case LABEL:surge=X,rainfall=Y");
    auto* validate = app.add_subcommand("validate", "re-check emitted artifacts");
    auto* oracle_check = app.add_subcommand("oracle-check", "cross-check inference paths");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitConfig;
    }

    try {
        auto cfg = load_config(config_path);
        if (*seed_opt) overrides.seed = seed;
        if (*threads_opt) overrides.threads = threads;
        if (*out_opt) overrides.out = out;
        apply_overrides(cfg, overrides);
        for (const auto& c : inline_cases) dopt.inline_cases.push_back(parse_inline_case(c));

        if (*build) return cmd_build(cfg);
        if (*hazard) return cmd_hazard(cfg, oracle);
        if (*deagg) return cmd_deagg(cfg, dopt);
        if (*validate) return cmd_validate(cfg);
        if (*oracle_check) return cmd_oracle_check(cfg);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ValidationError& e) {
        std::cerr << "validation failed: " << e.what() << "\n";
        return kExitValidation;
    } catch (const ZeroEvidenceError& e) {
        std::cerr << "zero evidence: " << e.what() << "\n";
        return kExitZeroEvidence;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitOk;
}
