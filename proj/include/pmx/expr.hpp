#pragma once

#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>

namespace pmx {

// Error from Expr::parse; offset is the byte position in the input.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t offset);
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

// Domain violation during evaluation (division by zero, log of a non-positive
// value, non-finite intermediate). Raised instead of silently returning NaN.
class EvalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Immutable parsed expression in the scalar time variable t.
//
// Grammar (fixed whitelist, no implicit multiplication):
//   expr   := term (('+'|'-') term)*
//   term   := factor (('*'|'/') factor)*
//   factor := '-' factor | power
//   power  := atom ('^' factor)?            -- right-associative
//   atom   := number | 't' | 'pi' | 'e' | fn '(' expr ')' | '(' expr ')'
//   fn     := sin | cos | tan | exp | log | sqrt | abs
//
// Named constants resolve at parse time. ASTs are immutable after parse and
// evaluation is pure, so a single Expr may be evaluated from many threads.
class Expr {
public:
    Expr();  // the constant 0

    static Expr parse(std::string_view text);

    // Value at time t. Throws EvalError on domain violations.
    double operator()(double t) const;

    // Canonical text form; Expr::parse(str()) evaluates identically.
    std::string str() const;

    struct Node;

private:
    explicit Expr(std::shared_ptr<const Node> root);
    std::shared_ptr<const Node> root_;
};

}  // namespace pmx
