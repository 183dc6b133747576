#pragma once

// Closed-form scalar coefficient fields over (x, y).
//
// Grammar (highest precedence first):
//   primary := number | x | y | pi | func '(' expr ')' | '(' expr ')'
//   power   := primary [ '^' unary ]           (right associative)
//   unary   := '-' unary | '+' unary | power    (so -x^2 == -(x^2))
//   term    := unary { ('*' | '/') unary }
//   expr    := term { ('+' | '-') term }
//   func    := exp | log | sin | cos | sqrt
//
// Fields are immutable and cheap to copy (shared expression tree), so they can
// be evaluated concurrently without synchronization.

#include <memory>
#include <optional>
#include <string>
#include <string_view>

namespace ucp {

enum class Variable { X, Y };

class ScalarField {
public:
    struct Node;

    /// The constant-zero field.
    ScalarField();

    static ScalarField constant(double value);
    static ScalarField variable(Variable v);

    /// Evaluates at (x, y). Throws DomainError instead of returning NaN/Inf.
    double operator()(double x, double y) const;

    /// Original text for parsed fields, otherwise a printed form of the tree.
    const std::string& source() const { return source_; }
    std::string to_string() const;

    bool is_constant() const;
    std::optional<double> constant_value() const;
    bool depends_on(Variable v) const;

    const std::shared_ptr<const Node>& root() const { return root_; }

    explicit ScalarField(std::shared_ptr<const Node> root, std::string source = {});

private:
    std::shared_ptr<const Node> root_;
    std::string source_;
};

ScalarField parse(std::string_view text);

inline double evaluate(const ScalarField& f, double x, double y) { return f(x, y); }

/// Exact symbolic partial derivative. The result is not simplified beyond
/// folding literal subtrees and dropping multiplications by 0 or 1.
ScalarField differentiate(const ScalarField& f, Variable v);

ScalarField operator+(const ScalarField& a, const ScalarField& b);
ScalarField operator-(const ScalarField& a, const ScalarField& b);
ScalarField operator*(const ScalarField& a, const ScalarField& b);
ScalarField operator/(const ScalarField& a, const ScalarField& b);
ScalarField operator-(const ScalarField& a);

inline ScalarField operator+(const ScalarField& a, double b) { return a + ScalarField::constant(b); }
inline ScalarField operator+(double a, const ScalarField& b) { return ScalarField::constant(a) + b; }
inline ScalarField operator-(const ScalarField& a, double b) { return a - ScalarField::constant(b); }
inline ScalarField operator-(double a, const ScalarField& b) { return ScalarField::constant(a) - b; }
inline ScalarField operator*(const ScalarField& a, double b) { return a * ScalarField::constant(b); }
inline ScalarField operator*(double a, const ScalarField& b) { return ScalarField::constant(a) * b; }
inline ScalarField operator/(const ScalarField& a, double b) { return a / ScalarField::constant(b); }
inline ScalarField operator/(double a, const ScalarField& b) { return ScalarField::constant(a) / b; }

ScalarField pow(const ScalarField& base, const ScalarField& exponent);
ScalarField pow(const ScalarField& base, double exponent);
ScalarField exp(const ScalarField& f);
ScalarField log(const ScalarField& f);
ScalarField sin(const ScalarField& f);
ScalarField cos(const ScalarField& f);
ScalarField sqrt(const ScalarField& f);

} // namespace ucp
