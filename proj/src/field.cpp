#include "ucp/field.hpp"

#include "ucp/errors.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace ucp {

enum class Op { Const, X, Y, Neg, Add, Sub, Mul, Div, Pow, Exp, Log, Sin, Cos, Sqrt };

struct ScalarField::Node {
    Op op = Op::Const;
    double value = 0.0;
    std::shared_ptr<const Node> lhs;
    std::shared_ptr<const Node> rhs;
};

namespace {

using NodePtr = std::shared_ptr<const ScalarField::Node>;

NodePtr make_const(double v)
{
    auto n = std::make_shared<ScalarField::Node>();
    n->op = Op::Const;
    n->value = v;
    return n;
}

NodePtr make_leaf(Op op)
{
    auto n = std::make_shared<ScalarField::Node>();
    n->op = op;
    return n;
}

bool is_unary(Op op)
{
    return op == Op::Neg || op == Op::Exp || op == Op::Log || op == Op::Sin || op == Op::Cos ||
           op == Op::Sqrt;
}

double checked(double v, const char* what)
{
    if (!std::isfinite(v))
        throw DomainError(std::string("non-finite result in ") + what);
    return v;
}

double apply_unary(Op op, double a)
{
    switch (op) {
    case Op::Neg:
        return -a;
    case Op::Exp:
        return checked(std::exp(a), "exp");
    case Op::Log:
        if (!(a > 0.0))
            throw DomainError("log of non-positive argument " + std::to_string(a));
        return std::log(a);
    case Op::Sin:
        return std::sin(a);
    case Op::Cos:
        return std::cos(a);
    case Op::Sqrt:
        if (a < 0.0)
            throw DomainError("sqrt of negative argument " + std::to_string(a));
        return std::sqrt(a);
    default:
        break;
    }
    throw Error("internal: bad unary op");
}

double apply_binary(Op op, double a, double b)
{
    switch (op) {
    case Op::Add:
        return checked(a + b, "+");
    case Op::Sub:
        return checked(a - b, "-");
    case Op::Mul:
        return checked(a * b, "*");
    case Op::Div:
        if (b == 0.0)
            throw DomainError("division by zero");
        return checked(a / b, "/");
    case Op::Pow:
        if (a == 0.0 && b < 0.0)
            throw DomainError("division by zero in 0^negative");
        if (a < 0.0 && std::trunc(b) != b)
            throw DomainError("negative base with non-integer exponent");
        return checked(std::pow(a, b), "^");
    default:
        break;
    }
    throw Error("internal: bad binary op");
}

double eval(const ScalarField::Node& n, double x, double y)
{
    switch (n.op) {
    case Op::Const:
        return n.value;
    case Op::X:
        return x;
    case Op::Y:
        return y;
    default:
        break;
    }
    if (is_unary(n.op))
        return apply_unary(n.op, eval(*n.lhs, x, y));
    return apply_binary(n.op, eval(*n.lhs, x, y), eval(*n.rhs, x, y));
}

bool is_const(const NodePtr& n, double v) { return n->op == Op::Const && n->value == v; }

// Literal folding only: used by the parser.
NodePtr fold_unary(Op op, NodePtr a)
{
    if (a->op == Op::Const) {
        try {
            return make_const(apply_unary(op, a->value));
        } catch (const DomainError&) {
            // leave unfolded; the error surfaces at evaluation time
        }
    }
    auto n = std::make_shared<ScalarField::Node>();
    n->op = op;
    n->lhs = std::move(a);
    return n;
}

NodePtr fold_binary(Op op, NodePtr a, NodePtr b)
{
    if (a->op == Op::Const && b->op == Op::Const) {
        try {
            return make_const(apply_binary(op, a->value, b->value));
        } catch (const DomainError&) {
        }
    }
    auto n = std::make_shared<ScalarField::Node>();
    n->op = op;
    n->lhs = std::move(a);
    n->rhs = std::move(b);
    return n;
}

// Folding plus the 0/1 identities; used for derivatives and programmatic construction.
NodePtr simp_unary(Op op, NodePtr a)
{
    if (op == Op::Neg && a->op == Op::Neg)
        return a->lhs;
    return fold_unary(op, std::move(a));
}

NodePtr simp_binary(Op op, NodePtr a, NodePtr b)
{
    switch (op) {
    case Op::Add:
        if (is_const(a, 0.0))
            return b;
        if (is_const(b, 0.0))
            return a;
        break;
    case Op::Sub:
        if (is_const(b, 0.0))
            return a;
        if (is_const(a, 0.0))
            return simp_unary(Op::Neg, std::move(b));
        break;
    case Op::Mul:
        if (is_const(a, 0.0) || is_const(b, 0.0))
            return make_const(0.0);
        if (is_const(a, 1.0))
            return b;
        if (is_const(b, 1.0))
            return a;
        if (is_const(a, -1.0))
            return simp_unary(Op::Neg, std::move(b));
        if (is_const(b, -1.0))
            return simp_unary(Op::Neg, std::move(a));
        break;
    case Op::Div:
        if (is_const(b, 1.0))
            return a;
        if (is_const(a, 0.0) && b->op == Op::Const && b->value != 0.0)
            return make_const(0.0);
        break;
    case Op::Pow:
        if (is_const(b, 1.0))
            return a;
        if (is_const(b, 0.0))
            return make_const(1.0);
        break;
    default:
        break;
    }
    return fold_binary(op, std::move(a), std::move(b));
}

NodePtr derive(const NodePtr& n, Variable v);

bool node_depends(const ScalarField::Node& n, Variable v)
{
    switch (n.op) {
    case Op::Const:
        return false;
    case Op::X:
        return v == Variable::X;
    case Op::Y:
        return v == Variable::Y;
    default:
        break;
    }
    if (is_unary(n.op))
        return node_depends(*n.lhs, v);
    return node_depends(*n.lhs, v) || node_depends(*n.rhs, v);
}

NodePtr derive(const NodePtr& n, Variable v)
{
    switch (n->op) {
    case Op::Const:
        return make_const(0.0);
    case Op::X:
        return make_const(v == Variable::X ? 1.0 : 0.0);
    case Op::Y:
        return make_const(v == Variable::Y ? 1.0 : 0.0);
    default:
        break;
    }
    const NodePtr& a = n->lhs;
    if (!node_depends(*n, v))
        return make_const(0.0);
    switch (n->op) {
    case Op::Neg:
        return simp_unary(Op::Neg, derive(a, v));
    case Op::Exp:
        return simp_binary(Op::Mul, n, derive(a, v));
    case Op::Log:
        return simp_binary(Op::Div, derive(a, v), a);
    case Op::Sin:
        return simp_binary(Op::Mul, simp_unary(Op::Cos, a), derive(a, v));
    case Op::Cos:
        return simp_unary(Op::Neg, simp_binary(Op::Mul, simp_unary(Op::Sin, a), derive(a, v)));
    case Op::Sqrt:
        return simp_binary(Op::Div, derive(a, v), simp_binary(Op::Mul, make_const(2.0), n));
    default:
        break;
    }
    const NodePtr& b = n->rhs;
    switch (n->op) {
    case Op::Add:
        return simp_binary(Op::Add, derive(a, v), derive(b, v));
    case Op::Sub:
        return simp_binary(Op::Sub, derive(a, v), derive(b, v));
    case Op::Mul:
        return simp_binary(Op::Add, simp_binary(Op::Mul, derive(a, v), b),
                           simp_binary(Op::Mul, a, derive(b, v)));
    case Op::Div:
        // (a/b)' = a'/b - a b' / b^2
        return simp_binary(
            Op::Sub, simp_binary(Op::Div, derive(a, v), b),
            simp_binary(Op::Div, simp_binary(Op::Mul, a, derive(b, v)), simp_binary(Op::Mul, b, b)));
    case Op::Pow: {
        if (!node_depends(*b, v)) {
            // c * a^(c-1) * a'
            NodePtr reduced = simp_binary(Op::Pow, a, simp_binary(Op::Sub, b, make_const(1.0)));
            return simp_binary(Op::Mul, simp_binary(Op::Mul, b, reduced), derive(a, v));
        }
        // a^b * (b' log a + b a'/a)
        NodePtr term1 = simp_binary(Op::Mul, derive(b, v), simp_unary(Op::Log, a));
        NodePtr term2 = node_depends(*a, v)
                            ? simp_binary(Op::Div, simp_binary(Op::Mul, b, derive(a, v)), a)
                            : make_const(0.0);
        return simp_binary(Op::Mul, n, simp_binary(Op::Add, term1, term2));
    }
    default:
        break;
    }
    throw Error("internal: bad op in derivative");
}

int precedence(const ScalarField::Node& n)
{
    switch (n.op) {
    case Op::Add:
    case Op::Sub:
        return 1;
    case Op::Mul:
    case Op::Div:
        return 2;
    case Op::Neg:
        return 3;
    case Op::Pow:
        return 4;
    case Op::Const:
        return n.value < 0.0 ? 3 : 5;
    default:
        return 5;
    }
}

std::string format_number(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string print(const ScalarField::Node& n);

std::string wrap(const ScalarField::Node& child, int min_prec)
{
    std::string s = print(child);
    return precedence(child) < min_prec ? "(" + s + ")" : s;
}

const char* func_name(Op op)
{
    switch (op) {
    case Op::Exp:
        return "exp";
    case Op::Log:
        return "log";
    case Op::Sin:
        return "sin";
    case Op::Cos:
        return "cos";
    case Op::Sqrt:
        return "sqrt";
    default:
        return "?";
    }
}

std::string print(const ScalarField::Node& n)
{
    switch (n.op) {
    case Op::Const:
        return format_number(n.value);
    case Op::X:
        return "x";
    case Op::Y:
        return "y";
    case Op::Neg:
        return "-" + wrap(*n.lhs, 3);
    case Op::Add:
        return wrap(*n.lhs, 1) + "+" + wrap(*n.rhs, 2);
    case Op::Sub:
        return wrap(*n.lhs, 1) + "-" + wrap(*n.rhs, 2);
    case Op::Mul:
        return wrap(*n.lhs, 2) + "*" + wrap(*n.rhs, 3);
    case Op::Div:
        return wrap(*n.lhs, 2) + "/" + wrap(*n.rhs, 3);
    case Op::Pow:
        return wrap(*n.lhs, 5) + "^" + wrap(*n.rhs, 3);
    default:
        return std::string(func_name(n.op)) + "(" + print(*n.lhs) + ")";
    }
}

// ---------------------------------------------------------------------------
// Recursive-descent parser

class Parser {
public:
    explicit Parser(std::string_view text) : text_(text) {}

    NodePtr parse_all()
    {
        NodePtr n = expr();
        skip_ws();
        if (pos_ != text_.size())
            throw ParseError("unexpected character '" + std::string(1, text_[pos_]) + "'", pos_);
        return n;
    }

private:
    void skip_ws()
    {
        while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' ||
                                       text_[pos_] == '\n' || text_[pos_] == '\r'))
            ++pos_;
    }

    bool accept(char c)
    {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    NodePtr expr()
    {
        NodePtr lhs = term();
        for (;;) {
            if (accept('+'))
                lhs = fold_binary(Op::Add, lhs, term());
            else if (accept('-'))
                lhs = fold_binary(Op::Sub, lhs, term());
            else
                return lhs;
        }
    }

    NodePtr term()
    {
        NodePtr lhs = unary();
        for (;;) {
            if (accept('*'))
                lhs = fold_binary(Op::Mul, lhs, unary());
            else if (accept('/'))
                lhs = fold_binary(Op::Div, lhs, unary());
            else
                return lhs;
        }
    }

    NodePtr unary()
    {
        if (accept('-'))
            return fold_unary(Op::Neg, unary());
        if (accept('+'))
            return unary();
        return power();
    }

    NodePtr power()
    {
        NodePtr base = primary();
        if (accept('^'))
            return fold_binary(Op::Pow, base, unary());
        return base;
    }

    NodePtr primary()
    {
        skip_ws();
        if (pos_ >= text_.size())
            throw ParseError("unexpected end of expression", pos_);
        const char c = text_[pos_];
        if ((c >= '0' && c <= '9') || c == '.')
            return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_')
            return identifier();
        if (c == '(') {
            ++pos_;
            NodePtr inner = expr();
            if (!accept(')'))
                throw ParseError("expected ')'", pos_);
            return inner;
        }
        throw ParseError("unexpected character '" + std::string(1, c) + "'", pos_);
    }

    NodePtr number()
    {
        const std::size_t start = pos_;
        while (pos_ < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) ||
                                       text_[pos_] == '.'))
            ++pos_;
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            std::size_t p = pos_ + 1;
            if (p < text_.size() && (text_[p] == '+' || text_[p] == '-'))
                ++p;
            if (p < text_.size() && std::isdigit(static_cast<unsigned char>(text_[p]))) {
                pos_ = p;
                while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
                    ++pos_;
            }
        }
        double value = 0.0;
        const char* first = text_.data() + start;
        const char* last = text_.data() + pos_;
        auto [ptr, ec] = std::from_chars(first, last, value);
        if (ec != std::errc() || ptr != last)
            throw ParseError("malformed number '" + std::string(first, last) + "'", start);
        return make_const(value);
    }

    NodePtr identifier()
    {
        const std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            ++pos_;
        const std::string_view name = text_.substr(start, pos_ - start);

        Op func = Op::Const;
        if (name == "exp")
            func = Op::Exp;
        else if (name == "log")
            func = Op::Log;
        else if (name == "sin")
            func = Op::Sin;
        else if (name == "cos")
            func = Op::Cos;
        else if (name == "sqrt")
            func = Op::Sqrt;

        if (func != Op::Const) {
            if (!accept('('))
                throw ParseError("function '" + std::string(name) + "' requires '('", pos_);
            skip_ws();
            if (pos_ < text_.size() && text_[pos_] == ')')
                throw ParseError("arity mismatch: '" + std::string(name) + "' takes 1 argument, got 0",
                                 pos_);
            NodePtr arg = expr();
            if (accept(','))
                throw ParseError(
                    "arity mismatch: '" + std::string(name) + "' takes 1 argument, got more", pos_ - 1);
            if (!accept(')'))
                throw ParseError("expected ')'", pos_);
            return fold_unary(func, std::move(arg));
        }

        NodePtr leaf;
        if (name == "x")
            leaf = make_leaf(Op::X);
        else if (name == "y")
            leaf = make_leaf(Op::Y);
        else if (name == "pi")
            leaf = make_const(std::numbers::pi);
        else
            throw ParseError("unknown identifier '" + std::string(name) + "'", start);

        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == '(')
            throw ParseError("arity mismatch: '" + std::string(name) + "' is not a function", pos_);
        return leaf;
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

} // namespace

ScalarField::ScalarField() : ScalarField(make_const(0.0)) {}

ScalarField::ScalarField(std::shared_ptr<const Node> root, std::string source)
    : root_(std::move(root)), source_(std::move(source))
{
    if (source_.empty())
        source_ = print(*root_);
}

ScalarField ScalarField::constant(double value) { return ScalarField(make_const(value)); }

ScalarField ScalarField::variable(Variable v) { return ScalarField(make_leaf(v == Variable::X ? Op::X : Op::Y)); }

double ScalarField::operator()(double x, double y) const { return eval(*root_, x, y); }

std::string ScalarField::to_string() const { return print(*root_); }

bool ScalarField::is_constant() const { return root_->op == Op::Const; }

std::optional<double> ScalarField::constant_value() const
{
    if (root_->op == Op::Const)
        return root_->value;
    return std::nullopt;
}

bool ScalarField::depends_on(Variable v) const { return node_depends(*root_, v); }

ScalarField parse(std::string_view text)
{
    Parser p(text);
    return ScalarField(p.parse_all(), std::string(text));
}

ScalarField differentiate(const ScalarField& f, Variable v) { return ScalarField(derive(f.root(), v)); }

ScalarField operator+(const ScalarField& a, const ScalarField& b)
{
    return ScalarField(simp_binary(Op::Add, a.root(), b.root()));
}

ScalarField operator-(const ScalarField& a, const ScalarField& b)
{
    return ScalarField(simp_binary(Op::Sub, a.root(), b.root()));
}

ScalarField operator*(const ScalarField& a, const ScalarField& b)
{
    return ScalarField(simp_binary(Op::Mul, a.root(), b.root()));
}

ScalarField operator/(const ScalarField& a, const ScalarField& b)
{
    return ScalarField(simp_binary(Op::Div, a.root(), b.root()));
}

ScalarField operator-(const ScalarField& a) { return ScalarField(simp_unary(Op::Neg, a.root())); }

ScalarField pow(const ScalarField& base, const ScalarField& exponent)
{
    return ScalarField(simp_binary(Op::Pow, base.root(), exponent.root()));
}

ScalarField pow(const ScalarField& base, double exponent) { return pow(base, ScalarField::constant(exponent)); }

ScalarField exp(const ScalarField& f) { return ScalarField(simp_unary(Op::Exp, f.root())); }
ScalarField log(const ScalarField& f) { return ScalarField(simp_unary(Op::Log, f.root())); }
ScalarField sin(const ScalarField& f) { return ScalarField(simp_unary(Op::Sin, f.root())); }
ScalarField cos(const ScalarField& f) { return ScalarField(simp_unary(Op::Cos, f.root())); }
ScalarField sqrt(const ScalarField& f) { return ScalarField(simp_unary(Op::Sqrt, f.root())); }

} // namespace ucp
