#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "jpmbn/study.hpp"

namespace jpmbn::test_support {

inline std::filesystem::path source_path(const std::string& rel) {
    return std::filesystem::path(JPMBN_SOURCE_DIR) / rel;
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("jpmbn_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

/// The shipped reduced study with its CPTs built once per process.
struct ReducedStudy {
    StudyConfig cfg;
    BuildProducts products;
};

inline const ReducedStudy& reduced_study() {
    static const ReducedStudy study = [] {
        ReducedStudy s{load_config(source_path("configs/reduced.json")), {}};
        s.products = build_products(s.cfg);
        return s;
    }();
    return study;
}

/// Random DAG over at most `max_vars` variables in index order with random CPTs.
inline DiscreteNetwork random_network(std::mt19937_64& rng, std::size_t max_vars = 6, std::size_t max_states = 4) {
    std::uniform_int_distribution<std::size_t> nvars(2, max_vars), nstates(2, max_states);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const std::size_t n = nvars(rng);
    std::vector<std::size_t> card(n);
    for (auto& c : card) c = nstates(rng);
    DiscreteNetwork net;
    for (std::size_t v = 0; v < n; ++v) {
        std::vector<std::string> parents;
        std::vector<std::size_t> cards;
        for (std::size_t p = 0; p < v; ++p)
            if (parents.size() < 3 && unit(rng) < 0.45) {
                parents.push_back("V" + std::to_string(p));
                cards.push_back(card[p]);
            }
        auto scope = parents;
        scope.push_back("V" + std::to_string(v));
        cards.push_back(card[v]);
        std::size_t rows = 1;
        for (std::size_t k = 0; k + 1 < cards.size(); ++k) rows *= cards[k];
        std::vector<double> values(rows * card[v]);
        for (std::size_t r = 0; r < rows; ++r) {
            double s = 0.0;
            for (std::size_t c = 0; c < card[v]; ++c) s += values[r * card[v] + c] = 0.05 + unit(rng);
            for (std::size_t c = 0; c < card[v]; ++c) values[r * card[v] + c] /= s;
        }
        net.add_node(VariableDecl::with_states("V" + std::to_string(v), card[v]), parents,
                     Factor(scope, cards, values));
    }
    return net;
}

/// Posterior of `targets` given `e` read directly off the full joint.
inline Factor posterior_by_enumeration(const DiscreteNetwork& net, const std::vector<std::string>& targets,
                                       const Evidence& e) {
    Factor f = reduce(enumerate_joint(net), e);
    for (const auto& node : net.nodes())
        if (std::find(targets.begin(), targets.end(), node.decl.id) == targets.end()) f = marginalize(f, node.decl.id);
    return f.permuted(targets).normalized();
}

}  // namespace jpmbn::test_support
