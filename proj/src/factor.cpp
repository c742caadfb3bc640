#include "jpmbn/factor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace jpmbn {

namespace {

std::size_t product_of(const std::vector<std::size_t>& cards) {
    std::size_t n = 1;
    for (auto c : cards) n *= c;
    return n;
}

std::vector<std::size_t> strides_of(const std::vector<std::size_t>& cards) {
    std::vector<std::size_t> strides(cards.size(), 1);
    for (std::size_t k = cards.size(); k-- > 1;) strides[k - 1] = strides[k] * cards[k];
    return strides;
}

}  // namespace

VariableDecl VariableDecl::with_states(std::string id, std::size_t cardinality) {
    VariableDecl v{std::move(id), {}};
    v.labels.reserve(cardinality);
    for (std::size_t s = 0; s < cardinality; ++s) v.labels.push_back(std::to_string(s));
    return v;
}

Factor::Factor() : values_{1.0} {}

Factor::Factor(std::vector<std::string> scope, std::vector<std::size_t> cardinalities,
               std::vector<double> values)
    : scope_(std::move(scope)), cards_(std::move(cardinalities)), values_(std::move(values)) {
    if (scope_.size() != cards_.size())
        throw FactorError("factor scope and cardinality lists differ in length");
    std::set<std::string_view> seen;
    for (std::size_t k = 0; k < scope_.size(); ++k) {
        if (!seen.insert(scope_[k]).second)
            throw FactorError("variable '" + scope_[k] + "' appears twice in a factor scope");
        if (cards_[k] == 0) throw FactorError("variable '" + scope_[k] + "' has zero states");
    }
    if (values_.size() != product_of(cards_))
        throw FactorError("factor table has " + std::to_string(values_.size()) +
                          " entries, expected " + std::to_string(product_of(cards_)));
    for (double v : values_)
        if (!(v >= 0.0) || !std::isfinite(v))
            throw FactorError("factor entries must be finite and nonnegative");
}

Factor Factor::constant(std::vector<std::string> scope, std::vector<std::size_t> cardinalities,
                        double fill) {
    const auto n = product_of(cardinalities);
    return Factor(std::move(scope), std::move(cardinalities), std::vector<double>(n, fill));
}

std::ptrdiff_t Factor::position(std::string_view var) const {
    for (std::size_t k = 0; k < scope_.size(); ++k)
        if (scope_[k] == var) return static_cast<std::ptrdiff_t>(k);
    return -1;
}

std::size_t Factor::cardinality_of(std::string_view var) const {
    auto p = position(var);
    if (p < 0) throw FactorError("variable '" + std::string(var) + "' not in factor scope");
    return cards_[static_cast<std::size_t>(p)];
}

std::size_t Factor::offset(std::span<const std::size_t> assignment) const {
    if (assignment.size() != scope_.size()) throw FactorError("assignment length mismatch");
    std::size_t off = 0;
    for (std::size_t k = 0; k < scope_.size(); ++k) {
        if (assignment[k] >= cards_[k]) throw FactorError("assignment state out of range");
        off = off * cards_[k] + assignment[k];
    }
    return off;
}

double Factor::sum() const { return std::accumulate(values_.begin(), values_.end(), 0.0); }

Factor Factor::normalized() const {
    const double z = sum();
    if (!(z > 0.0)) throw FactorError("cannot normalize a factor with zero mass");
    Factor out = *this;
    for (auto& v : out.values_) v /= z;
    return out;
}

Factor Factor::permuted(const std::vector<std::string>& order) const {
    if (order.size() != scope_.size()) throw FactorError("permutation has the wrong length");
    const auto src_strides = strides_of(cards_);
    std::vector<std::size_t> cards(order.size()), strides(order.size());
    for (std::size_t k = 0; k < order.size(); ++k) {
        auto p = position(order[k]);
        if (p < 0) throw FactorError("permutation names unknown variable '" + order[k] + "'");
        cards[k] = cards_[static_cast<std::size_t>(p)];
        strides[k] = src_strides[static_cast<std::size_t>(p)];
    }
    std::vector<double> out(values_.size());
    std::vector<std::size_t> idx(order.size(), 0);
    std::size_t src = 0;
    for (std::size_t n = 0; n < out.size(); ++n) {
        out[n] = values_[src];
        for (std::size_t k = order.size(); k-- > 0;) {
            if (++idx[k] < cards[k]) {
                src += strides[k];
                break;
            }
            src -= strides[k] * (cards[k] - 1);
            idx[k] = 0;
        }
    }
    return Factor(order, std::move(cards), std::move(out));
}

Factor factor_product(const Factor& a, const Factor& b) {
    std::vector<std::string> scope = a.scope();
    std::vector<std::size_t> cards = a.cardinalities();
    for (std::size_t k = 0; k < b.scope().size(); ++k) {
        auto p = a.position(b.scope()[k]);
        if (p >= 0) {
            if (a.cardinalities()[static_cast<std::size_t>(p)] != b.cardinalities()[k])
                throw FactorError("cardinality mismatch on shared variable '" + b.scope()[k] + "'");
        } else {
            scope.push_back(b.scope()[k]);
            cards.push_back(b.cardinalities()[k]);
        }
    }

    const auto a_strides_own = strides_of(a.cardinalities());
    const auto b_strides_own = strides_of(b.cardinalities());
    std::vector<std::size_t> sa(scope.size(), 0), sb(scope.size(), 0);
    for (std::size_t k = 0; k < scope.size(); ++k) {
        if (auto p = a.position(scope[k]); p >= 0) sa[k] = a_strides_own[static_cast<std::size_t>(p)];
        if (auto p = b.position(scope[k]); p >= 0) sb[k] = b_strides_own[static_cast<std::size_t>(p)];
    }

    std::vector<double> out(product_of(cards));
    const auto& av = a.values();
    const auto& bv = b.values();
    std::vector<std::size_t> idx(scope.size(), 0);
    std::size_t ia = 0, ib = 0;

    // Innermost variable handled as a tight loop.
    const std::size_t inner = scope.empty() ? 1 : cards.back();
    const std::size_t inner_sa = scope.empty() ? 0 : sa.back();
    const std::size_t inner_sb = scope.empty() ? 0 : sb.back();
    const std::size_t outer_dims = scope.empty() ? 0 : scope.size() - 1;
    for (std::size_t n = 0; n < out.size(); n += inner) {
        std::size_t ja = ia, jb = ib;
        for (std::size_t s = 0; s < inner; ++s, ja += inner_sa, jb += inner_sb)
            out[n + s] = av[ja] * bv[jb];
        for (std::size_t k = outer_dims; k-- > 0;) {
            if (++idx[k] < cards[k]) {
                ia += sa[k];
                ib += sb[k];
                break;
            }
            ia -= sa[k] * (cards[k] - 1);
            ib -= sb[k] * (cards[k] - 1);
            idx[k] = 0;
        }
    }
    return Factor(std::move(scope), std::move(cards), std::move(out));
}

Factor marginalize(const Factor& f, std::string_view var) {
    const auto p = f.position(var);
    if (p < 0) throw FactorError("cannot marginalize '" + std::string(var) + "': not in scope");
    const auto pos = static_cast<std::size_t>(p);
    const auto& cards = f.cardinalities();
    std::size_t outer = 1, inner = 1;
    for (std::size_t k = 0; k < pos; ++k) outer *= cards[k];
    for (std::size_t k = pos + 1; k < cards.size(); ++k) inner *= cards[k];
    const std::size_t card = cards[pos];

    std::vector<double> out(outer * inner, 0.0);
    const auto& v = f.values();
    for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t s = 0; s < card; ++s) {
            const double* src = v.data() + (o * card + s) * inner;
            double* dst = out.data() + o * inner;
            for (std::size_t i = 0; i < inner; ++i) dst[i] += src[i];
        }

    auto scope = f.scope();
    auto new_cards = cards;
    scope.erase(scope.begin() + p);
    new_cards.erase(new_cards.begin() + p);
    return Factor(std::move(scope), std::move(new_cards), std::move(out));
}

Factor reduce(const Factor& f, const Evidence& e) {
    Factor out = f;
    auto& v = out.mutable_values();
    const auto& cards = f.cardinalities();
    for (const auto& [var, state] : e) {
        const auto p = f.position(var);
        if (p < 0) continue;
        const auto pos = static_cast<std::size_t>(p);
        if (state >= cards[pos])
            throw FactorError("evidence state " + std::to_string(state) + " out of range for '" +
                              var + "'");
        std::size_t outer = 1, inner = 1;
        for (std::size_t k = 0; k < pos; ++k) outer *= cards[k];
        for (std::size_t k = pos + 1; k < cards.size(); ++k) inner *= cards[k];
        for (std::size_t o = 0; o < outer; ++o)
            for (std::size_t s = 0; s < cards[pos]; ++s) {
                if (s == state) continue;
                std::fill_n(v.begin() + static_cast<std::ptrdiff_t>((o * cards[pos] + s) * inner),
                            inner, 0.0);
            }
    }
    return out;
}

double max_abs_difference(const Factor& a, const Factor& b) {
    const Factor bb = b.permuted(a.scope());
    if (bb.cardinalities() != a.cardinalities()) throw FactorError("factor shapes differ");
    double worst = 0.0;
    for (std::size_t n = 0; n < a.size(); ++n)
        worst = std::max(worst, std::abs(a.values()[n] - bb.values()[n]));
    return worst;
}

}  // namespace jpmbn
