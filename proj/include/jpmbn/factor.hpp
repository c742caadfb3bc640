#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace jpmbn {

/// A discrete random variable: an id plus one label per mutually exclusive state.
struct VariableDecl {
    std::string id;
    std::vector<std::string> labels;

    std::size_t cardinality() const { return labels.size(); }

    /// Declares a variable with states labelled "0", "1", ...
    static VariableDecl with_states(std::string id, std::size_t cardinality);
};

/// Observed states, keyed by variable id.
using Evidence = std::map<std::string, std::size_t, std::less<>>;

class FactorError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Nonnegative table over an ordered scope of discrete variables.
///
/// Values are stored row-major with the last scope variable varying fastest.
/// A factor with an empty scope is a scalar holding a single value.
class Factor {
public:
    Factor();
    Factor(std::vector<std::string> scope, std::vector<std::size_t> cardinalities,
           std::vector<double> values);

    /// Factor of the given shape with every entry set to `fill`.
    static Factor constant(std::vector<std::string> scope, std::vector<std::size_t> cardinalities,
                           double fill);

    const std::vector<std::string>& scope() const { return scope_; }
    const std::vector<std::size_t>& cardinalities() const { return cards_; }
    const std::vector<double>& values() const { return values_; }
    std::vector<double>& mutable_values() { return values_; }

    std::size_t size() const { return values_.size(); }
    bool is_scalar() const { return scope_.empty(); }

    /// Position of `var` in the scope, or -1.
    std::ptrdiff_t position(std::string_view var) const;
    bool contains(std::string_view var) const { return position(var) >= 0; }
    std::size_t cardinality_of(std::string_view var) const;

    /// Flat offset of a full assignment (one state per scope variable, in scope order).
    std::size_t offset(std::span<const std::size_t> assignment) const;
    double at(std::span<const std::size_t> assignment) const { return values_[offset(assignment)]; }

    double sum() const;
    /// Copy scaled to sum to one. Throws if the total mass is zero.
    Factor normalized() const;
    /// Same table with the scope reordered; `order` must be a permutation of scope().
    Factor permuted(const std::vector<std::string>& order) const;

private:
    std::vector<std::string> scope_;
    std::vector<std::size_t> cards_;
    std::vector<double> values_;
};

Factor factor_product(const Factor& a, const Factor& b);

/// Sums `var` out of the factor.
Factor marginalize(const Factor& f, std::string_view var);

/// Zeroes every entry inconsistent with the evidence; the scope is unchanged.
/// Evidence on variables outside the scope is ignored.
Factor reduce(const Factor& f, const Evidence& e);

/// Largest absolute entrywise difference after aligning b's scope to a's.
double max_abs_difference(const Factor& a, const Factor& b);

}  // namespace jpmbn
