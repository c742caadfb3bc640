#include "jpmbn/network_io.hpp"

#include <cstring>
#include <fstream>
#include <map>

namespace jpmbn {

using nlohmann::json;

json factor_to_json(const Factor& f) {
    return json{{"scope", f.scope()}, {"cardinalities", f.cardinalities()}, {"values", f.values()}};
}

Factor factor_from_json(const json& j) {
    return Factor(j.at("scope").get<std::vector<std::string>>(),
                  j.at("cardinalities").get<std::vector<std::size_t>>(),
                  j.at("values").get<std::vector<double>>());
}

json network_to_json(const DiscreteNetwork& net) {
    json vars = json::array();
    json parents = json::object();
    json cpts = json::object();
    for (const auto& n : net.nodes()) {
        vars.push_back({{"id", n.decl.id}, {"labels", n.decl.labels}});
        parents[n.decl.id] = n.parents;
        cpts[n.decl.id] = n.cpt->values();
    }
    return json{{"variables", vars}, {"parents", parents}, {"cpts", cpts}};
}

DiscreteNetwork network_from_json(const json& j) {
    std::map<std::string, std::size_t> cards;
    for (const auto& v : j.at("variables"))
        cards[v.at("id").get<std::string>()] = v.at("labels").size();

    DiscreteNetwork net;
    for (const auto& v : j.at("variables")) {
        VariableDecl decl{v.at("id").get<std::string>(),
                          v.at("labels").get<std::vector<std::string>>()};
        std::vector<std::string> parents;
        if (j.contains("parents") && j["parents"].contains(decl.id))
            parents = j["parents"][decl.id].get<std::vector<std::string>>();
        std::vector<std::string> scope = parents;
        scope.push_back(decl.id);
        std::vector<std::size_t> sc;
        for (const auto& s : scope) {
            auto it = cards.find(s);
            if (it == cards.end()) throw NetworkError("CPT of '" + decl.id + "' names unknown parent '" + s + "'");
            sc.push_back(it->second);
        }
        Factor cpt(scope, sc, j.at("cpts").at(decl.id).get<std::vector<double>>());
        net.add_node(std::move(decl), std::move(parents), std::move(cpt));
    }
    return net;
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << text;
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

void save_factor(const Factor& f, const std::filesystem::path& path) {
    if (f.size() <= kInlineValueLimit) {
        write_text_atomic(path, factor_to_json(f).dump() + "\n");
        return;
    }
    auto bin = path;
    bin.replace_extension(".bin");
    std::string bytes(f.size() * sizeof(double), '\0');
    std::memcpy(bytes.data(), f.values().data(), bytes.size());
    write_text_atomic(bin, bytes);
    json doc{{"scope", f.scope()},
             {"cardinalities", f.cardinalities()},
             {"values_file", bin.filename().string()}};
    write_text_atomic(path, doc.dump() + "\n");
}

Factor load_factor(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    json doc = json::parse(in);
    if (!doc.contains("values_file")) return factor_from_json(doc);

    auto scope = doc.at("scope").get<std::vector<std::string>>();
    auto cards = doc.at("cardinalities").get<std::vector<std::size_t>>();
    std::size_t n = 1;
    for (auto c : cards) n *= c;
    const auto bin = path.parent_path() / doc.at("values_file").get<std::string>();
    std::ifstream raw(bin, std::ios::binary);
    if (!raw) throw std::runtime_error("cannot read " + bin.string());
    std::vector<double> values(n);
    raw.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (raw.gcount() != static_cast<std::streamsize>(n * sizeof(double)))
        throw std::runtime_error("truncated factor data in " + bin.string());
    return Factor(std::move(scope), std::move(cards), std::move(values));
}

}  // namespace jpmbn
