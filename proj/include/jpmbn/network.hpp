#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "jpmbn/factor.hpp"

namespace jpmbn {

/// Thrown when the entered evidence has probability zero, so no posterior exists.
class ZeroEvidenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NetworkError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Discrete Bayesian network. Each node owns a CPT whose scope is
/// [parents..., child]. Immutable once built; CPT storage is shared between copies.
class DiscreteNetwork {
public:
    struct Node {
        VariableDecl decl;
        std::vector<std::string> parents;
        std::shared_ptr<const Factor> cpt;
    };

    /// Adds a node. Parents must already be declared; the CPT scope must be
    /// [parents..., id]. Structural problems are reported by validate_network.
    void add_node(VariableDecl decl, std::vector<std::string> parents, Factor cpt);
    void add_node(VariableDecl decl, std::vector<std::string> parents,
                  std::shared_ptr<const Factor> cpt);

    const std::vector<Node>& nodes() const { return nodes_; }
    const Node& node(std::string_view id) const;
    bool has(std::string_view id) const { return index_of(id) >= 0; }
    std::ptrdiff_t index_of(std::string_view id) const;
    std::size_t cardinality(std::string_view id) const { return node(id).decl.cardinality(); }

private:
    std::vector<Node> nodes_;
};

/// Structural and numerical problems, one message per violation. Empty means valid.
/// Messages start with a category word: "cycle", "scope", "normalization", "labels",
/// "parent".
std::vector<std::string> validate_network(const DiscreteNetwork& net);

struct QueryOptions {
    /// Explicit elimination order; variables not listed are appended in min-fill order.
    std::optional<std::vector<std::string>> elimination_order;
    /// Drop nodes that are neither targets, evidence, nor their ancestors.
    bool prune_barren = true;
};

struct QueryResult {
    Factor posterior;  ///< p(targets | e), scope in target order
    double evidence_probability = 1.0;
};

/// Exact posterior by variable elimination with a greedy min-fill ordering.
/// Throws ZeroEvidenceError when P(e) = 0.
QueryResult query(const DiscreteNetwork& net, const std::vector<std::string>& targets,
                  const Evidence& e = {}, const QueryOptions& options = {});

/// Unnormalized p(targets, e) from the same elimination machinery.
Factor joint_with_evidence(const DiscreteNetwork& net, const std::vector<std::string>& targets,
                           const Evidence& e = {}, const QueryOptions& options = {});

/// Min-fill elimination order over the given factor scopes, excluding `keep`.
std::vector<std::string> min_fill_order(const std::vector<const Factor*>& factors,
                                        const std::vector<std::string>& keep);

inline constexpr std::size_t kDefaultEnumerationCap = 10'000'000;

/// Full joint by direct multiplication of every CPT, scope in node declaration order.
Factor enumerate_joint(const DiscreteNetwork& net, std::size_t cap = kDefaultEnumerationCap);

/// Topological order of node ids; throws NetworkError on a cycle.
std::vector<std::string> topological_order(const DiscreteNetwork& net);

}  // namespace jpmbn
