#pragma once

// Scalar functions for scenario descriptions: a small arithmetic expression
// language over the variables t, x, z, and piecewise-linear tables.
//
// Grammar:
//   expr   := term (('+' | '-') term)*
//   term   := unary (('*' | '/') unary)*
//   unary  := ('+' | '-') unary | power
//   power  := atom ('^' unary)?          (right associative)
//   atom   := number | name | name '(' expr (',' expr)* ')' | '(' expr ')'

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hris {

class ExpressionError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

struct Variables {
    double t = 0.0;
    double x = 0.0;
    double z = 0.0;
};

class Expression {
  public:
    Expression() : Expression("0") {}

    explicit Expression(std::string source) : m_source(std::move(source))
    {
        Parser p{m_source, 0};
        m_root = p.parse_expr();
        p.skip_ws();
        if (p.pos != m_source.size()) {
            throw ExpressionError("unexpected '" + std::string(1, m_source[p.pos]) + "' at position " +
                                  std::to_string(p.pos) + " in \"" + m_source + "\"");
        }
    }

    double operator()(const Variables& v) const { return m_root->eval(v); }

    const std::string& source() const noexcept { return m_source; }

  private:
    struct Node {
        virtual ~Node() = default;
        virtual double eval(const Variables& v) const = 0;
    };
    using NodePtr = std::shared_ptr<const Node>;

    struct Constant final : Node {
        double value;
        explicit Constant(double c) : value(c) {}
        double eval(const Variables&) const override { return value; }
    };

    struct Variable final : Node {
        char which;
        explicit Variable(char c) : which(c) {}
        double eval(const Variables& v) const override
        {
            switch (which) {
            case 't': return v.t;
            case 'x': return v.x;
            default: return v.z;
            }
        }
    };

    struct Binary final : Node {
        char op;
        NodePtr lhs, rhs;
        Binary(char o, NodePtr l, NodePtr r) : op(o), lhs(std::move(l)), rhs(std::move(r)) {}
        double eval(const Variables& v) const override
        {
            const double a = lhs->eval(v);
            const double b = rhs->eval(v);
            switch (op) {
            case '+': return a + b;
            case '-': return a - b;
            case '*': return a * b;
            case '/': return a / b;
            default: return std::pow(a, b);
            }
        }
    };

    struct Negate final : Node {
        NodePtr arg;
        explicit Negate(NodePtr a) : arg(std::move(a)) {}
        double eval(const Variables& v) const override { return -arg->eval(v); }
    };

    struct Call final : Node {
        std::string name;
        std::vector<NodePtr> args;
        Call(std::string n, std::vector<NodePtr> a) : name(std::move(n)), args(std::move(a)) {}
        double eval(const Variables& v) const override
        {
            const double a = args[0]->eval(v);
            if (name == "sin") return std::sin(a);
            if (name == "cos") return std::cos(a);
            if (name == "exp") return std::exp(a);
            if (name == "log") return std::log(a);
            if (name == "sqrt") return std::sqrt(a);
            if (name == "abs") return std::abs(a);
            if (name == "tanh") return std::tanh(a);
            double r = a;
            for (std::size_t i = 1; i < args.size(); ++i) {
                const double b = args[i]->eval(v);
                r = (name == "max") ? std::max(r, b) : std::min(r, b);
            }
            return r;
        }
    };

    struct Parser {
        const std::string& s;
        std::size_t pos;

        void skip_ws()
        {
            while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) {
                ++pos;
            }
        }

        bool accept(char c)
        {
            skip_ws();
            if (pos < s.size() && s[pos] == c) {
                ++pos;
                return true;
            }
            return false;
        }

        [[noreturn]] void fail(const std::string& msg) const
        {
            throw ExpressionError(msg + " at position " + std::to_string(pos) + " in \"" + s + "\"");
        }

        NodePtr parse_expr()
        {
            NodePtr lhs = parse_term();
            for (;;) {
                if (accept('+')) {
                    lhs = std::make_shared<Binary>('+', lhs, parse_term());
                }
                else if (accept('-')) {
                    lhs = std::make_shared<Binary>('-', lhs, parse_term());
                }
                else {
                    return lhs;
                }
            }
        }

        NodePtr parse_term()
        {
            NodePtr lhs = parse_unary();
            for (;;) {
                if (accept('*')) {
                    lhs = std::make_shared<Binary>('*', lhs, parse_unary());
                }
                else if (accept('/')) {
                    lhs = std::make_shared<Binary>('/', lhs, parse_unary());
                }
                else {
                    return lhs;
                }
            }
        }

        NodePtr parse_unary()
        {
            if (accept('-')) {
                return std::make_shared<Negate>(parse_unary());
            }
            if (accept('+')) {
                return parse_unary();
            }
            NodePtr base = parse_atom();
            if (accept('^')) {
                return std::make_shared<Binary>('^', base, parse_unary());
            }
            return base;
        }

        NodePtr parse_atom()
        {
            skip_ws();
            if (pos >= s.size()) {
                fail("unexpected end of expression");
            }
            const char c = s[pos];
            if (accept('(')) {
                NodePtr inner = parse_expr();
                if (!accept(')')) {
                    fail("expected ')'");
                }
                return inner;
            }
            if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
                const char* begin = s.c_str() + pos;
                char* end = nullptr;
                const double value = std::strtod(begin, &end);
                if (end == begin) {
                    fail("malformed number");
                }
                pos += static_cast<std::size_t>(end - begin);
                return std::make_shared<Constant>(value);
            }
            if (std::isalpha(static_cast<unsigned char>(c))) {
                std::string name;
                while (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_')) {
                    name += s[pos++];
                }
                if (accept('(')) {
                    return parse_call(name);
                }
                if (name == "t" || name == "x" || name == "z") {
                    return std::make_shared<Variable>(name[0]);
                }
                if (name == "pi") {
                    return std::make_shared<Constant>(std::numbers::pi);
                }
                fail("unknown identifier '" + name + "'");
            }
            fail("unexpected character '" + std::string(1, c) + "'");
        }

        NodePtr parse_call(const std::string& name)
        {
            static const std::vector<std::string> unary = {"sin", "cos", "exp", "log", "sqrt", "abs", "tanh"};
            const bool is_unary = std::find(unary.begin(), unary.end(), name) != unary.end();
            const bool is_fold = name == "max" || name == "min";
            if (!is_unary && !is_fold) {
                fail("unknown function '" + name + "'");
            }
            std::vector<NodePtr> args;
            args.push_back(parse_expr());
            while (accept(',')) {
                args.push_back(parse_expr());
            }
            if (!accept(')')) {
                fail("expected ')' after arguments of '" + name + "'");
            }
            if (is_unary && args.size() != 1) {
                fail("'" + name + "' takes one argument");
            }
            if (is_fold && args.size() < 2) {
                fail("'" + name + "' takes at least two arguments");
            }
            return std::make_shared<Call>(name, std::move(args));
        }
    };

    std::string m_source;
    NodePtr m_root;
};

/// Piecewise-linear interpolant of (abscissa, value) samples, constant
/// extrapolation outside the table.
class PiecewiseLinear {
  public:
    PiecewiseLinear(std::vector<double> abscissae, std::vector<double> values)
        : m_x(std::move(abscissae)), m_y(std::move(values))
    {
        if (m_x.size() != m_y.size() || m_x.empty()) {
            throw std::invalid_argument("piecewise-linear table: abscissae and values must be nonempty and equal length");
        }
        for (std::size_t i = 1; i < m_x.size(); ++i) {
            if (!(m_x[i] > m_x[i - 1])) {
                throw std::invalid_argument("piecewise-linear table: abscissae must be strictly increasing");
            }
        }
    }

    double operator()(double s) const
    {
        if (m_x.size() == 1 || s <= m_x.front()) return m_y.front();
        if (s >= m_x.back()) return m_y.back();
        const auto k = segment(s);
        const double w = (s - m_x[k]) / (m_x[k + 1] - m_x[k]);
        return (1.0 - w) * m_y[k] + w * m_y[k + 1];
    }

    double slope(double s) const
    {
        if (m_x.size() == 1 || s < m_x.front() || s > m_x.back()) return 0.0;
        const auto k = segment(std::min(s, std::nextafter(m_x.back(), m_x.front())));
        return (m_y[k + 1] - m_y[k]) / (m_x[k + 1] - m_x[k]);
    }

    double max_abs_slope() const
    {
        double L = 0.0;
        for (std::size_t k = 0; k + 1 < m_x.size(); ++k) {
            L = std::max(L, std::abs((m_y[k + 1] - m_y[k]) / (m_x[k + 1] - m_x[k])));
        }
        return L;
    }

  private:
    std::size_t segment(double s) const
    {
        const auto it = std::upper_bound(m_x.begin(), m_x.end(), s);
        return static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, (it - m_x.begin()) - 1));
    }

    std::vector<double> m_x;
    std::vector<double> m_y;
};

/// Real function of one variable; the variable is bound to t, x or z when
/// the function comes from an expression.
using ScalarFunction = std::function<double(double)>;

inline ScalarFunction bind_variable(Expression e, char variable)
{
    switch (variable) {
    case 't': return [e = std::move(e)](double s) { return e(Variables{s, 0.0, 0.0}); };
    case 'x': return [e = std::move(e)](double s) { return e(Variables{0.0, s, 0.0}); };
    case 'z': return [e = std::move(e)](double s) { return e(Variables{0.0, 0.0, s}); };
    default: throw std::invalid_argument("bind_variable: variable must be t, x or z");
    }
}

inline ScalarFunction constant_function(double c)
{
    return [c](double) { return c; };
}

} // namespace hris
