#pragma once

#include <memory>
#include <string>
#include <string_view>

#include "nashpde/grid.hpp"

namespace nashpde {

namespace detail {
struct ExprNode;
}

/// Arithmetic expression over the variables x1, x2 (space), y (state) and
/// yd (target field), with +, -, *, /, integer powers and sin/cos/exp/tanh.
/// Immutable; evaluation is pure and reentrant.
class Expr {
public:
    /// Recursive-descent parse. Throws DomainError with the offending
    /// position on syntax errors, unknown identifiers, or non-integer
    /// exponents.
    static Expr parse(std::string_view source);

    static Expr number(double value);

    /// Exact symbolic derivative with respect to y; x1, x2, yd are constants.
    Expr diff_y() const;

    /// Throws DomainError on division by zero or non-finite results.
    double eval(double x1, double x2, double y, double yd) const;

    /// Parseable text form; parse(to_string()) is pointwise equal.
    std::string to_string() const;

    bool uses_x2() const;
    bool uses_y() const;
    bool uses_yd() const;

private:
    explicit Expr(std::shared_ptr<const detail::ExprNode> root);
    std::shared_ptr<const detail::ExprNode> root_;
};

/// Sample a purely spatial expression (no y, yd) at the interior nodes.
GridFunction sample_spatial(const Expr& e, const Grid& grid);

/// Node-wise f(x, y(x)) for a state-dependent expression without yd.
GridFunction evaluate_state_function(const Expr& e, const GridFunction& y);

/// Node-wise L(x, y(x), yd(x)) for a cost integrand.
GridFunction evaluate_integrand(const Expr& e, const GridFunction& y,
                                const GridFunction& yd);

}  // namespace nashpde
