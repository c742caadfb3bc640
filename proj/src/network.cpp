#include "jpmbn/network.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

namespace jpmbn {

void DiscreteNetwork::add_node(VariableDecl decl, std::vector<std::string> parents, Factor cpt) {
    add_node(std::move(decl), std::move(parents), std::make_shared<const Factor>(std::move(cpt)));
}

void DiscreteNetwork::add_node(VariableDecl decl, std::vector<std::string> parents,
                               std::shared_ptr<const Factor> cpt) {
    if (has(decl.id)) throw NetworkError("duplicate node '" + decl.id + "'");
    if (!cpt) throw NetworkError("node '" + decl.id + "' has no CPT");
    nodes_.push_back(Node{std::move(decl), std::move(parents), std::move(cpt)});
}

const DiscreteNetwork::Node& DiscreteNetwork::node(std::string_view id) const {
    const auto k = index_of(id);
    if (k < 0) throw NetworkError("unknown node '" + std::string(id) + "'");
    return nodes_[static_cast<std::size_t>(k)];
}

std::ptrdiff_t DiscreteNetwork::index_of(std::string_view id) const {
    for (std::size_t k = 0; k < nodes_.size(); ++k)
        if (nodes_[k].decl.id == id) return static_cast<std::ptrdiff_t>(k);
    return -1;
}

std::vector<std::string> topological_order(const DiscreteNetwork& net) {
    const auto& nodes = net.nodes();
    std::map<std::string, std::size_t, std::less<>> indegree;
    std::map<std::string, std::vector<std::string>, std::less<>> children;
    for (const auto& n : nodes) indegree[n.decl.id] = 0;
    for (const auto& n : nodes)
        for (const auto& p : n.parents) {
            if (!indegree.contains(p)) continue;
            ++indegree[n.decl.id];
            children[p].push_back(n.decl.id);
        }
    // Kahn's algorithm, seeded in declaration order so the result is stable.
    std::vector<std::string> order, ready;
    for (const auto& n : nodes)
        if (indegree[n.decl.id] == 0) ready.push_back(n.decl.id);
    std::reverse(ready.begin(), ready.end());
    while (!ready.empty()) {
        auto id = ready.back();
        ready.pop_back();
        order.push_back(id);
        for (const auto& c : children[id])
            if (--indegree[c] == 0) ready.insert(ready.begin(), c);
    }
    if (order.size() != nodes.size()) throw NetworkError("cycle in parent graph");
    return order;
}

std::vector<std::string> validate_network(const DiscreteNetwork& net) {
    std::vector<std::string> violations;
    const auto& nodes = net.nodes();

    for (const auto& n : nodes) {
        if (n.decl.cardinality() == 0)
            violations.push_back("labels: variable '" + n.decl.id + "' has no states");
        std::set<std::string> labels(n.decl.labels.begin(), n.decl.labels.end());
        if (labels.size() != n.decl.labels.size())
            violations.push_back("labels: variable '" + n.decl.id + "' has duplicate labels");
        for (const auto& p : n.parents)
            if (!net.has(p))
                violations.push_back("parent: variable '" + n.decl.id + "' names unknown parent '" +
                                     p + "'");
    }

    try {
        (void)topological_order(net);
    } catch (const NetworkError&) {
        violations.push_back("cycle: parent graph is not acyclic");
    }

    for (const auto& n : nodes) {
        const Factor& cpt = *n.cpt;
        std::vector<std::string> expected = n.parents;
        expected.push_back(n.decl.id);
        bool scope_ok = cpt.scope() == expected;
        if (scope_ok) {
            for (std::size_t k = 0; k < expected.size(); ++k) {
                if (!net.has(expected[k])) continue;
                if (cpt.cardinalities()[k] != net.cardinality(expected[k])) scope_ok = false;
            }
        }
        if (!scope_ok) {
            violations.push_back("scope: CPT of '" + n.decl.id +
                                 "' does not match [parents..., child] declaration");
            continue;
        }
        const std::size_t card = n.decl.cardinality();
        const std::size_t rows = cpt.size() / card;
        const auto& v = cpt.values();
        for (std::size_t r = 0; r < rows; ++r) {
            double s = 0.0;
            for (std::size_t c = 0; c < card; ++c) s += v[r * card + c];
            if (std::abs(s - 1.0) > 1e-9) {
                std::ostringstream msg;
                msg.precision(12);
                msg << "normalization: CPT of '" << n.decl.id << "' row " << r << " sums to " << s;
                violations.push_back(msg.str());
                break;
            }
        }
    }
    return violations;
}

std::vector<std::string> min_fill_order(const std::vector<const Factor*>& factors,
                                        const std::vector<std::string>& keep) {
    std::map<std::string, std::set<std::string>> adjacency;
    std::map<std::string, std::size_t> card;
    for (const auto* f : factors) {
        for (std::size_t i = 0; i < f->scope().size(); ++i) {
            const auto& u = f->scope()[i];
            card[u] = f->cardinalities()[i];
            auto& nb = adjacency[u];
            for (const auto& w : f->scope())
                if (w != u) nb.insert(w);
        }
    }
    std::set<std::string> remaining;
    for (const auto& [v, _] : adjacency)
        if (std::find(keep.begin(), keep.end(), v) == keep.end()) remaining.insert(v);

    std::vector<std::string> order;
    while (!remaining.empty()) {
        const std::string* best = nullptr;
        std::size_t best_fill = 0;
        double best_size = 0.0;
        for (const auto& v : remaining) {
            const auto& nb = adjacency[v];
            std::size_t fill = 0;
            double size = 1.0;
            for (auto a = nb.begin(); a != nb.end(); ++a) {
                size *= static_cast<double>(card[*a]);
                for (auto b = std::next(a); b != nb.end(); ++b)
                    if (!adjacency[*a].contains(*b)) ++fill;
            }
            if (!best || fill < best_fill || (fill == best_fill && size < best_size)) {
                best = &v;
                best_fill = fill;
                best_size = size;
            }
        }
        const std::string v = *best;
        const auto nb = adjacency[v];
        for (const auto& a : nb) {
            for (const auto& b : nb)
                if (a != b) adjacency[a].insert(b);
            adjacency[a].erase(v);
        }
        adjacency.erase(v);
        remaining.erase(v);
        order.push_back(v);
    }
    return order;
}

namespace {

std::set<std::string> relevant_nodes(const DiscreteNetwork& net,
                                     const std::vector<std::string>& targets, const Evidence& e) {
    std::set<std::string> keep;
    std::vector<std::string> stack(targets.begin(), targets.end());
    for (const auto& [v, _] : e) stack.push_back(v);
    while (!stack.empty()) {
        auto v = stack.back();
        stack.pop_back();
        if (!keep.insert(v).second) continue;
        for (const auto& p : net.node(v).parents) stack.push_back(p);
    }
    return keep;
}

}  // namespace

Factor joint_with_evidence(const DiscreteNetwork& net, const std::vector<std::string>& targets,
                           const Evidence& e, const QueryOptions& options) {
    if (targets.empty()) throw NetworkError("query needs at least one target");
    for (const auto& t : targets)
        if (!net.has(t)) throw NetworkError("unknown query target '" + t + "'");
    for (const auto& [v, s] : e) {
        if (!net.has(v)) throw NetworkError("evidence on unknown variable '" + v + "'");
        if (s >= net.cardinality(v))
            throw FactorError("evidence state " + std::to_string(s) + " out of range for '" + v + "'");
    }

    std::set<std::string> relevant;
    if (options.prune_barren) {
        relevant = relevant_nodes(net, targets, e);
    } else {
        for (const auto& n : net.nodes()) relevant.insert(n.decl.id);
    }

    std::vector<std::shared_ptr<const Factor>> pool;
    for (const auto& n : net.nodes()) {
        if (!relevant.contains(n.decl.id)) continue;
        bool touched = false;
        for (const auto& v : n.cpt->scope())
            if (e.contains(v)) touched = true;
        pool.push_back(touched ? std::make_shared<const Factor>(reduce(*n.cpt, e)) : n.cpt);
    }

    std::vector<std::string> order;
    if (options.elimination_order) {
        for (const auto& v : *options.elimination_order)
            if (relevant.contains(v) &&
                std::find(targets.begin(), targets.end(), v) == targets.end())
                order.push_back(v);
    }
    {
        std::vector<const Factor*> raw;
        for (const auto& f : pool) raw.push_back(f.get());
        std::vector<std::string> keep = targets;
        keep.insert(keep.end(), order.begin(), order.end());
        for (auto& v : min_fill_order(raw, keep)) order.push_back(std::move(v));
    }

    for (const auto& var : order) {
        std::vector<std::shared_ptr<const Factor>> rest;
        std::shared_ptr<const Factor> merged;
        for (auto& f : pool) {
            if (!f->contains(var)) {
                rest.push_back(std::move(f));
                continue;
            }
            merged = merged ? std::make_shared<const Factor>(factor_product(*merged, *f)) : f;
        }
        if (merged) rest.push_back(std::make_shared<const Factor>(marginalize(*merged, var)));
        pool = std::move(rest);
    }

    Factor result;
    for (const auto& f : pool) result = factor_product(result, *f);
    return result.permuted(targets);
}

QueryResult query(const DiscreteNetwork& net, const std::vector<std::string>& targets,
                  const Evidence& e, const QueryOptions& options) {
    Factor joint = joint_with_evidence(net, targets, e, options);
    const double pe = joint.sum();
    if (!(pe > 0.0)) throw ZeroEvidenceError("evidence has zero probability; posterior undefined");
    return QueryResult{joint.normalized(), pe};
}

Factor enumerate_joint(const DiscreteNetwork& net, std::size_t cap) {
    double total = 1.0;
    for (const auto& n : net.nodes()) total *= static_cast<double>(n.decl.cardinality());
    if (total > static_cast<double>(cap))
        throw NetworkError("joint table of " + std::to_string(total) + " entries exceeds cap of " +
                           std::to_string(cap));
    Factor joint;
    for (const auto& n : net.nodes()) joint = factor_product(joint, *n.cpt);
    std::vector<std::string> order;
    for (const auto& n : net.nodes()) order.push_back(n.decl.id);
    return joint.permuted(order);
}

}  // namespace jpmbn
