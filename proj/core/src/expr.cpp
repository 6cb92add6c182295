#include "nashpde/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <utility>

#include "nashpde/errors.hpp"

namespace nashpde {

namespace detail {

enum class Var { X1, X2, Y, Yd };
enum class Func { Sin, Cos, Exp, Tanh };

struct ExprNode {
    enum class Kind { Number, Variable, Negate, Add, Sub, Mul, Div, Pow, Call };

    Kind kind;
    double number = 0.0;
    Var var = Var::X1;
    Func func = Func::Sin;
    int exponent = 0;
    std::shared_ptr<const ExprNode> a;
    std::shared_ptr<const ExprNode> b;
};

using NodePtr = std::shared_ptr<const ExprNode>;

namespace {

NodePtr make_number(double v) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprNode::Kind::Number;
    n->number = v;
    return n;
}

NodePtr make_var(Var v) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprNode::Kind::Variable;
    n->var = v;
    return n;
}

bool is_number(const NodePtr& n, double v) {
    return n->kind == ExprNode::Kind::Number && n->number == v;
}

NodePtr make_binary(ExprNode::Kind kind, NodePtr a, NodePtr b) {
    // Constant folding and the cheap algebraic identities; keeps derivative
    // trees from ballooning.
    if (a->kind == ExprNode::Kind::Number && b->kind == ExprNode::Kind::Number) {
        switch (kind) {
            case ExprNode::Kind::Add: return make_number(a->number + b->number);
            case ExprNode::Kind::Sub: return make_number(a->number - b->number);
            case ExprNode::Kind::Mul: return make_number(a->number * b->number);
            case ExprNode::Kind::Div:
                if (b->number != 0.0) return make_number(a->number / b->number);
                break;
            default: break;
        }
    }
    switch (kind) {
        case ExprNode::Kind::Add:
            if (is_number(a, 0.0)) return b;
            if (is_number(b, 0.0)) return a;
            break;
        case ExprNode::Kind::Sub:
            if (is_number(b, 0.0)) return a;
            break;
        case ExprNode::Kind::Mul:
            if (is_number(a, 0.0) || is_number(b, 0.0)) return make_number(0.0);
            if (is_number(a, 1.0)) return b;
            if (is_number(b, 1.0)) return a;
            break;
        case ExprNode::Kind::Div:
            if (is_number(b, 0.0)) throw DomainError("expression: division by literal zero");
            if (is_number(a, 0.0)) return make_number(0.0);
            if (is_number(b, 1.0)) return a;
            break;
        default:
            break;
    }
    auto n = std::make_shared<ExprNode>();
    n->kind = kind;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

NodePtr make_negate(NodePtr a) {
    if (a->kind == ExprNode::Kind::Number) return make_number(-a->number);
    if (a->kind == ExprNode::Kind::Negate) return a->a;
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprNode::Kind::Negate;
    n->a = std::move(a);
    return n;
}

NodePtr make_pow(NodePtr base, int exponent) {
    if (exponent == 0) return make_number(1.0);
    if (exponent == 1) return base;
    if (base->kind == ExprNode::Kind::Number) {
        return make_number(std::pow(base->number, exponent));
    }
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprNode::Kind::Pow;
    n->exponent = exponent;
    n->a = std::move(base);
    return n;
}

NodePtr make_call(Func f, NodePtr arg) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprNode::Kind::Call;
    n->func = f;
    n->a = std::move(arg);
    return n;
}

class Parser {
public:
    explicit Parser(std::string_view src) : src_(src) {}

    NodePtr run() {
        skip_ws();
        if (pos_ >= src_.size()) {
            throw DomainError("expression: empty source");
        }
        NodePtr e = parse_expr();
        skip_ws();
        if (pos_ < src_.size()) {
            fail("unexpected trailing input");
        }
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const {
        throw DomainError("expression: " + msg + " at position " + std::to_string(pos_));
    }

    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }

    bool eat(char c) {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    char peek() {
        skip_ws();
        return pos_ < src_.size() ? src_[pos_] : '\0';
    }

    NodePtr parse_expr() {
        NodePtr e = parse_term();
        while (true) {
            if (eat('+')) {
                e = make_binary(ExprNode::Kind::Add, e, parse_term());
            } else if (eat('-')) {
                e = make_binary(ExprNode::Kind::Sub, e, parse_term());
            } else {
                return e;
            }
        }
    }

    NodePtr parse_term() {
        NodePtr e = parse_factor();
        while (true) {
            if (eat('*')) {
                e = make_binary(ExprNode::Kind::Mul, e, parse_factor());
            } else if (eat('/')) {
                e = make_binary(ExprNode::Kind::Div, e, parse_factor());
            } else {
                return e;
            }
        }
    }

    NodePtr parse_factor() {
        NodePtr e = parse_unary();
        if (eat('^')) {
            return make_pow(e, parse_int_exponent());
        }
        return e;
    }

    int parse_int_exponent() {
        skip_ws();
        std::size_t start = pos_;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        if (pos_ == start) {
            fail("exponent must be a literal non-negative integer");
        }
        if (pos_ < src_.size() && (src_[pos_] == '.' || src_[pos_] == 'e' || src_[pos_] == 'E')) {
            fail("exponent must be a literal non-negative integer");
        }
        return std::atoi(std::string(src_.substr(start, pos_ - start)).c_str());
    }

    NodePtr parse_unary() {
        if (eat('-')) {
            return make_negate(parse_atom());
        }
        return parse_atom();
    }

    NodePtr parse_atom() {
        skip_ws();
        if (pos_ >= src_.size()) fail("unexpected end of input");
        const char c = src_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            return parse_number();
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            return parse_ident();
        }
        if (c == '(') {
            ++pos_;
            NodePtr e = parse_expr();
            if (!eat(')')) fail("expected ')'");
            return e;
        }
        fail(std::string("unexpected character '") + c + "'");
    }

    NodePtr parse_number() {
        const std::string tail(src_.substr(pos_));
        char* end = nullptr;
        const double v = std::strtod(tail.c_str(), &end);
        if (end == tail.c_str()) fail("malformed number");
        pos_ += static_cast<std::size_t>(end - tail.c_str());
        return make_number(v);
    }

    NodePtr parse_ident() {
        std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
            ++pos_;
        }
        const std::string_view name = src_.substr(start, pos_ - start);
        if (name == "x1") return make_var(Var::X1);
        if (name == "x2") return make_var(Var::X2);
        if (name == "y") return make_var(Var::Y);
        if (name == "yd") return make_var(Var::Yd);

        Func f;
        if (name == "sin") f = Func::Sin;
        else if (name == "cos") f = Func::Cos;
        else if (name == "exp") f = Func::Exp;
        else if (name == "tanh") f = Func::Tanh;
        else {
            pos_ = start;
            fail("unknown identifier '" + std::string(name) + "'");
        }
        if (!eat('(')) fail("expected '(' after function name");
        NodePtr arg = parse_expr();
        if (!eat(')')) fail("expected ')'");
        return make_call(f, std::move(arg));
    }

    std::string_view src_;
    std::size_t pos_ = 0;
};

NodePtr derivative(const NodePtr& n) {
    using Kind = ExprNode::Kind;
    switch (n->kind) {
        case Kind::Number:
            return make_number(0.0);
        case Kind::Variable:
            return make_number(n->var == Var::Y ? 1.0 : 0.0);
        case Kind::Negate:
            return make_negate(derivative(n->a));
        case Kind::Add:
            return make_binary(Kind::Add, derivative(n->a), derivative(n->b));
        case Kind::Sub:
            return make_binary(Kind::Sub, derivative(n->a), derivative(n->b));
        case Kind::Mul:
            return make_binary(Kind::Add,
                               make_binary(Kind::Mul, derivative(n->a), n->b),
                               make_binary(Kind::Mul, n->a, derivative(n->b)));
        case Kind::Div:
            return make_binary(
                Kind::Div,
                make_binary(Kind::Sub,
                            make_binary(Kind::Mul, derivative(n->a), n->b),
                            make_binary(Kind::Mul, n->a, derivative(n->b))),
                make_pow(n->b, 2));
        case Kind::Pow:
            // d/dy u^k = k * u^(k-1) * u'
            return make_binary(
                Kind::Mul,
                make_binary(Kind::Mul, make_number(n->exponent), make_pow(n->a, n->exponent - 1)),
                derivative(n->a));
        case Kind::Call: {
            NodePtr inner = derivative(n->a);
            NodePtr outer;
            switch (n->func) {
                case Func::Sin: outer = make_call(Func::Cos, n->a); break;
                case Func::Cos: outer = make_negate(make_call(Func::Sin, n->a)); break;
                case Func::Exp: outer = make_call(Func::Exp, n->a); break;
                case Func::Tanh:
                    outer = make_binary(Kind::Sub, make_number(1.0),
                                        make_pow(make_call(Func::Tanh, n->a), 2));
                    break;
            }
            return make_binary(Kind::Mul, outer, inner);
        }
    }
    throw DomainError("expression: corrupt node");
}

double eval_node(const ExprNode& n, double x1, double x2, double y, double yd) {
    using Kind = ExprNode::Kind;
    switch (n.kind) {
        case Kind::Number: return n.number;
        case Kind::Variable:
            switch (n.var) {
                case Var::X1: return x1;
                case Var::X2: return x2;
                case Var::Y: return y;
                case Var::Yd: return yd;
            }
            break;
        case Kind::Negate: return -eval_node(*n.a, x1, x2, y, yd);
        case Kind::Add: return eval_node(*n.a, x1, x2, y, yd) + eval_node(*n.b, x1, x2, y, yd);
        case Kind::Sub: return eval_node(*n.a, x1, x2, y, yd) - eval_node(*n.b, x1, x2, y, yd);
        case Kind::Mul: return eval_node(*n.a, x1, x2, y, yd) * eval_node(*n.b, x1, x2, y, yd);
        case Kind::Div: {
            const double den = eval_node(*n.b, x1, x2, y, yd);
            if (den == 0.0) throw DomainError("expression: division by zero");
            return eval_node(*n.a, x1, x2, y, yd) / den;
        }
        case Kind::Pow: {
            const double base = eval_node(*n.a, x1, x2, y, yd);
            double r = 1.0;
            for (int i = 0; i < n.exponent; ++i) r *= base;
            return r;
        }
        case Kind::Call: {
            const double a = eval_node(*n.a, x1, x2, y, yd);
            switch (n.func) {
                case Func::Sin: return std::sin(a);
                case Func::Cos: return std::cos(a);
                case Func::Exp: return std::exp(a);
                case Func::Tanh: return std::tanh(a);
            }
            break;
        }
    }
    throw DomainError("expression: corrupt node");
}

void print_node(const ExprNode& n, std::string& out) {
    using Kind = ExprNode::Kind;
    switch (n.kind) {
        case Kind::Number: {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.17g", n.number);
            if (n.number < 0.0) {
                out += '(';
                out += buf;
                out += ')';
            } else {
                out += buf;
            }
            return;
        }
        case Kind::Variable:
            switch (n.var) {
                case Var::X1: out += "x1"; return;
                case Var::X2: out += "x2"; return;
                case Var::Y: out += "y"; return;
                case Var::Yd: out += "yd"; return;
            }
            return;
        case Kind::Negate:
            out += "-(";
            print_node(*n.a, out);
            out += ')';
            return;
        case Kind::Add:
        case Kind::Sub:
        case Kind::Mul:
        case Kind::Div: {
            out += '(';
            print_node(*n.a, out);
            switch (n.kind) {
                case Kind::Add: out += " + "; break;
                case Kind::Sub: out += " - "; break;
                case Kind::Mul: out += "*"; break;
                default: out += "/"; break;
            }
            print_node(*n.b, out);
            out += ')';
            return;
        }
        case Kind::Pow:
            out += '(';
            print_node(*n.a, out);
            out += ")^";
            out += std::to_string(n.exponent);
            return;
        case Kind::Call:
            switch (n.func) {
                case Func::Sin: out += "sin("; break;
                case Func::Cos: out += "cos("; break;
                case Func::Exp: out += "exp("; break;
                case Func::Tanh: out += "tanh("; break;
            }
            print_node(*n.a, out);
            out += ')';
            return;
    }
}

bool node_uses(const ExprNode& n, Var v) {
    if (n.kind == ExprNode::Kind::Variable) return n.var == v;
    if (n.a && node_uses(*n.a, v)) return true;
    if (n.b && node_uses(*n.b, v)) return true;
    return false;
}

}  // namespace

}  // namespace detail

Expr::Expr(std::shared_ptr<const detail::ExprNode> root) : root_(std::move(root)) {}

Expr Expr::parse(std::string_view source) {
    detail::Parser p(source);
    return Expr(p.run());
}

Expr Expr::number(double value) {
    return Expr(detail::make_number(value));
}

Expr Expr::diff_y() const {
    return Expr(detail::derivative(root_));
}

double Expr::eval(double x1, double x2, double y, double yd) const {
    const double v = detail::eval_node(*root_, x1, x2, y, yd);
    if (!std::isfinite(v)) {
        throw DomainError("expression: evaluation produced a non-finite value");
    }
    return v;
}

std::string Expr::to_string() const {
    std::string out;
    detail::print_node(*root_, out);
    return out;
}

bool Expr::uses_x2() const { return detail::node_uses(*root_, detail::Var::X2); }
bool Expr::uses_y() const { return detail::node_uses(*root_, detail::Var::Y); }
bool Expr::uses_yd() const { return detail::node_uses(*root_, detail::Var::Yd); }

GridFunction sample_spatial(const Expr& e, const Grid& grid) {
    if (e.uses_y() || e.uses_yd()) {
        throw StructuralError("sample_spatial: expression must not reference y or yd");
    }
    const int n = grid.interior_count();
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const auto x = grid.node(i);
        out[static_cast<std::size_t>(i)] = e.eval(x[0], x[1], 0.0, 0.0);
    }
    return GridFunction(grid, std::move(out));
}

GridFunction evaluate_state_function(const Expr& e, const GridFunction& y) {
    if (e.uses_yd()) {
        throw StructuralError("evaluate_state_function: expression must not reference yd");
    }
    const Grid& grid = y.grid();
    const int n = grid.interior_count();
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const auto x = grid.node(i);
        out[static_cast<std::size_t>(i)] = e.eval(x[0], x[1], y[i], 0.0);
    }
    return GridFunction(grid, std::move(out));
}

GridFunction evaluate_integrand(const Expr& e, const GridFunction& y,
                                const GridFunction& yd) {
    detail::require_same_grid(y.grid(), yd.grid(), "evaluate_integrand");
    const Grid& grid = y.grid();
    const int n = grid.interior_count();
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const auto x = grid.node(i);
        out[static_cast<std::size_t>(i)] = e.eval(x[0], x[1], y[i], yd[i]);
    }
    return GridFunction(grid, std::move(out));
}

}  // namespace nashpde
