#include "pmx/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <utility>

namespace pmx {

ParseError::ParseError(const std::string& what, std::size_t offset)
    : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"),
      offset_(offset) {}

namespace {

enum class Fn { sin, cos, tan, exp, log, sqrt, abs };

const char* fn_name(Fn f) {
    switch (f) {
        case Fn::sin: return "sin";
        case Fn::cos: return "cos";
        case Fn::tan: return "tan";
        case Fn::exp: return "exp";
        case Fn::log: return "log";
        case Fn::sqrt: return "sqrt";
        case Fn::abs: return "abs";
    }
    return "?";
}

std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);  // shortest round-trip
    return std::string(buf, res.ptr);
}

}  // namespace

struct Expr::Node {
    enum class Kind { num, time, neg, add, sub, mul, div, pow, call };
    Kind kind;
    double value = 0.0;  // num
    Fn fn = Fn::sin;     // call
    std::shared_ptr<const Node> a, b;
    std::size_t pos = 0;  // source offset, for eval diagnostics
};

namespace {

using Node = Expr::Node;
using Kind = Node::Kind;
using NodePtr = std::shared_ptr<const Node>;

NodePtr make_node(Kind k, std::size_t pos, NodePtr a = nullptr, NodePtr b = nullptr) {
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->a = std::move(a);
    n->b = std::move(b);
    n->pos = pos;
    return n;
}

NodePtr make_num(double v, std::size_t pos) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::num;
    n->value = v;
    n->pos = pos;
    return n;
}

struct Token {
    enum class Type { number, ident, op, lparen, rparen, end };
    Type type = Type::end;
    double value = 0.0;
    std::string text;
    char op = 0;
    std::size_t pos = 0;
};

struct Lexer {
    std::string_view src;
    std::size_t pos = 0;

    Token next() {
        while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos]))) ++pos;
        if (pos >= src.size()) return {Token::Type::end, 0.0, "", 0, src.size()};
        const std::size_t start = pos;
        const char c = src[pos];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            while (pos < src.size() &&
                   (std::isdigit(static_cast<unsigned char>(src[pos])) || src[pos] == '.'))
                ++pos;
            if (pos < src.size() && (src[pos] == 'e' || src[pos] == 'E')) {
                std::size_t p = pos + 1;
                if (p < src.size() && (src[p] == '+' || src[p] == '-')) ++p;
                if (p < src.size() && std::isdigit(static_cast<unsigned char>(src[p]))) {
                    pos = p;
                    while (pos < src.size() && std::isdigit(static_cast<unsigned char>(src[pos])))
                        ++pos;
                }
            }
            double v = 0.0;
            auto res = std::from_chars(src.data() + start, src.data() + pos, v);
            if (res.ec != std::errc{} || res.ptr != src.data() + pos)
                throw ParseError("malformed number '" + std::string(src.substr(start, pos - start)) + "'",
                                 start);
            return {Token::Type::number, v, "", 0, start};
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            while (pos < src.size() && std::isalpha(static_cast<unsigned char>(src[pos]))) ++pos;
            return {Token::Type::ident, 0.0, std::string(src.substr(start, pos - start)), 0, start};
        }
        ++pos;
        switch (c) {
            case '+': case '-': case '*': case '/': case '^':
                return {Token::Type::op, 0.0, "", c, start};
            case '(': return {Token::Type::lparen, 0.0, "", 0, start};
            case ')': return {Token::Type::rparen, 0.0, "", 0, start};
            default:
                throw ParseError(std::string("unexpected character '") + c + "'", start);
        }
    }
};

struct Parser {
    Lexer lex;
    Token cur;

    explicit Parser(std::string_view src) : lex{src} { advance(); }
    void advance() { cur = lex.next(); }

    bool at_op(char c) const { return cur.type == Token::Type::op && cur.op == c; }

    NodePtr parse_expr() {
        NodePtr left = parse_term();
        while (at_op('+') || at_op('-')) {
            const char op = cur.op;
            const std::size_t p = cur.pos;
            advance();
            NodePtr right = parse_term();
            left = make_node(op == '+' ? Kind::add : Kind::sub, p, left, right);
        }
        return left;
    }

    NodePtr parse_term() {
        NodePtr left = parse_factor();
        while (at_op('*') || at_op('/')) {
            const char op = cur.op;
            const std::size_t p = cur.pos;
            advance();
            NodePtr right = parse_factor();
            left = make_node(op == '*' ? Kind::mul : Kind::div, p, left, right);
        }
        return left;
    }

    NodePtr parse_factor() {
        if (at_op('-')) {
            const std::size_t p = cur.pos;
            advance();
            return make_node(Kind::neg, p, parse_factor());
        }
        return parse_power();
    }

    NodePtr parse_power() {
        NodePtr base = parse_atom();
        if (at_op('^')) {
            const std::size_t p = cur.pos;
            advance();
            NodePtr exponent = parse_factor();  // right-associative, allows 2^-3
            return make_node(Kind::pow, p, base, exponent);
        }
        return base;
    }

    NodePtr parse_atom() {
        switch (cur.type) {
            case Token::Type::number: {
                NodePtr n = make_num(cur.value, cur.pos);
                advance();
                return n;
            }
            case Token::Type::ident: {
                const std::string name = cur.text;
                const std::size_t p = cur.pos;
                advance();
                if (name == "t") return make_node(Kind::time, p);
                if (name == "pi") return make_num(std::numbers::pi, p);
                if (name == "e") return make_num(std::numbers::e, p);
                Fn fn;
                if (name == "sin") fn = Fn::sin;
                else if (name == "cos") fn = Fn::cos;
                else if (name == "tan") fn = Fn::tan;
                else if (name == "exp") fn = Fn::exp;
                else if (name == "log") fn = Fn::log;
                else if (name == "sqrt") fn = Fn::sqrt;
                else if (name == "abs") fn = Fn::abs;
                else throw ParseError("unknown identifier '" + name + "'", p);
                if (cur.type != Token::Type::lparen)
                    throw ParseError("expected '(' after '" + name + "'", cur.pos);
                advance();
                NodePtr arg = parse_expr();
                if (cur.type != Token::Type::rparen)
                    throw ParseError("expected ')'", cur.pos);
                advance();
                auto n = std::make_shared<Node>();
                n->kind = Kind::call;
                n->fn = fn;
                n->a = std::move(arg);
                n->pos = p;
                return n;
            }
            case Token::Type::lparen: {
                advance();
                NodePtr inner = parse_expr();
                if (cur.type != Token::Type::rparen)
                    throw ParseError("expected ')'", cur.pos);
                advance();
                return inner;
            }
            case Token::Type::end:
                throw ParseError("unexpected end of input", cur.pos);
            default:
                throw ParseError("expected a value", cur.pos);
        }
    }
};

double ensure_finite(double v, const char* what, std::size_t pos) {
    if (!std::isfinite(v))
        throw EvalError(std::string(what) + " produced a non-finite value (at byte " +
                        std::to_string(pos) + ")");
    return v;
}

double eval_node(const Node& n, double t) {
    switch (n.kind) {
        case Kind::num: return n.value;
        case Kind::time: return t;
        case Kind::neg: return -eval_node(*n.a, t);
        case Kind::add: return ensure_finite(eval_node(*n.a, t) + eval_node(*n.b, t), "'+'", n.pos);
        case Kind::sub: return ensure_finite(eval_node(*n.a, t) - eval_node(*n.b, t), "'-'", n.pos);
        case Kind::mul: return ensure_finite(eval_node(*n.a, t) * eval_node(*n.b, t), "'*'", n.pos);
        case Kind::div: {
            const double den = eval_node(*n.b, t);
            if (den == 0.0)
                throw EvalError("division by zero (at byte " + std::to_string(n.pos) + ")");
            return ensure_finite(eval_node(*n.a, t) / den, "'/'", n.pos);
        }
        case Kind::pow:
            return ensure_finite(std::pow(eval_node(*n.a, t), eval_node(*n.b, t)), "'^'", n.pos);
        case Kind::call: {
            const double x = eval_node(*n.a, t);
            switch (n.fn) {
                case Fn::sin: return std::sin(x);
                case Fn::cos: return std::cos(x);
                case Fn::tan: return ensure_finite(std::tan(x), "tan", n.pos);
                case Fn::exp: return ensure_finite(std::exp(x), "exp", n.pos);
                case Fn::log:
                    if (x <= 0.0)
                        throw EvalError("log of a non-positive value (at byte " +
                                        std::to_string(n.pos) + ")");
                    return std::log(x);
                case Fn::sqrt:
                    if (x < 0.0)
                        throw EvalError("sqrt of a negative value (at byte " +
                                        std::to_string(n.pos) + ")");
                    return std::sqrt(x);
                case Fn::abs: return std::fabs(x);
            }
            break;
        }
    }
    throw EvalError("malformed expression node");
}

// Precedence levels for minimal-paren printing.
int prec_of(Kind k) {
    switch (k) {
        case Kind::add: case Kind::sub: return 1;
        case Kind::mul: case Kind::div: return 2;
        case Kind::neg: return 3;
        case Kind::pow: return 4;
        default: return 5;
    }
}

void print_node(const Node& n, int min_prec, std::string& out) {
    const int p = prec_of(n.kind);
    const bool parens = p < min_prec;
    if (parens) out += '(';
    switch (n.kind) {
        case Kind::num: out += format_double(n.value); break;
        case Kind::time: out += 't'; break;
        case Kind::neg:
            out += '-';
            print_node(*n.a, 3, out);
            break;
        case Kind::add:
            print_node(*n.a, 1, out);
            out += " + ";
            print_node(*n.b, 2, out);
            break;
        case Kind::sub:
            print_node(*n.a, 1, out);
            out += " - ";
            print_node(*n.b, 2, out);
            break;
        case Kind::mul:
            print_node(*n.a, 2, out);
            out += '*';
            print_node(*n.b, 3, out);
            break;
        case Kind::div:
            print_node(*n.a, 2, out);
            out += '/';
            print_node(*n.b, 3, out);
            break;
        case Kind::pow:
            print_node(*n.a, 5, out);
            out += '^';
            print_node(*n.b, 4, out);
            break;
        case Kind::call:
            out += fn_name(n.fn);
            out += '(';
            print_node(*n.a, 0, out);
            out += ')';
            break;
    }
    if (parens) out += ')';
}

}  // namespace

Expr::Expr() : root_(make_num(0.0, 0)) {}

Expr::Expr(std::shared_ptr<const Node> root) : root_(std::move(root)) {}

Expr Expr::parse(std::string_view text) {
    Parser parser(text);
    if (parser.cur.type == Token::Type::end)
        throw ParseError("empty expression", 0);
    NodePtr root = parser.parse_expr();
    if (parser.cur.type != Token::Type::end)
        throw ParseError("unexpected trailing input", parser.cur.pos);
    return Expr(std::move(root));
}

double Expr::operator()(double t) const { return eval_node(*root_, t); }

std::string Expr::str() const {
    std::string out;
    print_node(*root_, 0, out);
    return out;
}

}  // namespace pmx
