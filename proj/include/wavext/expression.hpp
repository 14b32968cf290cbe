#pragma once

// Small arithmetic expression language over x, y, z used for function and
// domain specs on the command line.
//
//   expr    := or
//   or      := and ('||' and)*
//   and     := cmp ('&&' cmp)*
//   cmp     := sum (('<' | '<=' | '>' | '>=' | '==' | '!=') sum)?
//   sum     := product (('+' | '-') product)*
//   product := unary (('*' | '/') unary)*
//   unary   := ('-' | '+' | '!') unary | power
//   power   := atom ('^' unary)?
//   atom    := number | name | name '(' expr (',' expr)* ')' | '(' expr ')'
//
// Comparisons and logical operators return 1.0 / 0.0.

#include <cctype>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "common.hpp"

namespace wavext {

class Expression {
public:
    Expression() = default;

    static Expression parse(const std::string& text)
    {
        Parser p{text, 0};
        Expression e;
        e.root_ = p.parse_or();
        p.skip();
        if (p.pos != text.size())
            throw ConfigError("unexpected '" + text.substr(p.pos) + "' in expression \"" + text + "\"");
        e.text_ = text;
        e.arity_ = p.max_var + 1;
        return e;
    }

    double operator()(std::span<const double> x) const { return root_ ? root_->eval(x) : 0.0; }
    double operator()(double x, double y = 0, double z = 0) const
    {
        const double v[3] = {x, y, z};
        return (*this)(std::span<const double>(v, 3));
    }

    /// Number of leading variables referenced (x -> 1, y -> 2, z -> 3).
    int arity() const { return arity_; }
    const std::string& text() const { return text_; }

private:
    struct Node {
        virtual ~Node() = default;
        virtual double eval(std::span<const double> x) const = 0;
    };
    using NodePtr = std::shared_ptr<const Node>;

    struct Constant : Node {
        double v;
        explicit Constant(double v) : v(v) {}
        double eval(std::span<const double>) const override { return v; }
    };
    struct Variable : Node {
        std::size_t i;
        explicit Variable(std::size_t i) : i(i) {}
        double eval(std::span<const double> x) const override { return i < x.size() ? x[i] : 0.0; }
    };
    struct Unary : Node {
        std::function<double(double)> f;
        NodePtr a;
        Unary(std::function<double(double)> f, NodePtr a) : f(std::move(f)), a(std::move(a)) {}
        double eval(std::span<const double> x) const override { return f(a->eval(x)); }
    };
    struct Binary : Node {
        std::function<double(double, double)> f;
        NodePtr a, b;
        Binary(std::function<double(double, double)> f, NodePtr a, NodePtr b)
            : f(std::move(f)), a(std::move(a)), b(std::move(b))
        {
        }
        double eval(std::span<const double> x) const override { return f(a->eval(x), b->eval(x)); }
    };
    // short-circuit so that guards like "x > 0 && log(x) < 1" behave
    struct Logical : Node {
        bool is_and;
        NodePtr a, b;
        Logical(bool is_and, NodePtr a, NodePtr b) : is_and(is_and), a(std::move(a)), b(std::move(b)) {}
        double eval(std::span<const double> x) const override
        {
            const bool l = a->eval(x) != 0.0;
            if (is_and) return (l && b->eval(x) != 0.0) ? 1.0 : 0.0;
            return (l || b->eval(x) != 0.0) ? 1.0 : 0.0;
        }
    };

    struct Parser {
        const std::string& s;
        std::size_t pos;
        int max_var = -1;

        void skip()
        {
            while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
        }
        bool accept(const char* tok)
        {
            skip();
            const std::size_t n = std::char_traits<char>::length(tok);
            if (s.compare(pos, n, tok) == 0) {
                pos += n;
                return true;
            }
            return false;
        }
        [[noreturn]] void fail(const std::string& what) const
        {
            throw ConfigError(what + " at position " + std::to_string(pos) + " in expression \"" + s + "\"");
        }

        NodePtr parse_or()
        {
            NodePtr a = parse_and();
            while (accept("||")) a = std::make_shared<Logical>(false, a, parse_and());
            return a;
        }
        NodePtr parse_and()
        {
            NodePtr a = parse_cmp();
            while (accept("&&")) a = std::make_shared<Logical>(true, a, parse_cmp());
            return a;
        }
        NodePtr parse_cmp()
        {
            NodePtr a = parse_sum();
            auto mk = [&](auto op) { return std::make_shared<Binary>([op](double u, double v) { return op(u, v) ? 1.0 : 0.0; }, a, parse_sum()); };
            if (accept("<=")) return mk(std::less_equal<double>{});
            if (accept(">=")) return mk(std::greater_equal<double>{});
            if (accept("==")) return mk(std::equal_to<double>{});
            if (accept("!=")) return mk(std::not_equal_to<double>{});
            if (accept("<")) return mk(std::less<double>{});
            if (accept(">")) return mk(std::greater<double>{});
            return a;
        }
        NodePtr parse_sum()
        {
            NodePtr a = parse_product();
            for (;;) {
                if (accept("+")) a = std::make_shared<Binary>(std::plus<double>{}, a, parse_product());
                else if (accept("-")) a = std::make_shared<Binary>(std::minus<double>{}, a, parse_product());
                else return a;
            }
        }
        NodePtr parse_product()
        {
            NodePtr a = parse_unary();
            for (;;) {
                if (accept("*")) a = std::make_shared<Binary>(std::multiplies<double>{}, a, parse_unary());
                else if (accept("/")) a = std::make_shared<Binary>(std::divides<double>{}, a, parse_unary());
                else return a;
            }
        }
        NodePtr parse_unary()
        {
            if (accept("-")) return std::make_shared<Unary>(std::negate<double>{}, parse_unary());
            if (accept("+")) return parse_unary();
            skip();
            if (pos < s.size() && s[pos] == '!' && (pos + 1 >= s.size() || s[pos + 1] != '=')) {
                ++pos;
                return std::make_shared<Unary>([](double v) { return v == 0.0 ? 1.0 : 0.0; }, parse_unary());
            }
            return parse_power();
        }
        NodePtr parse_power()
        {
            NodePtr a = parse_atom();
            if (accept("^")) return std::make_shared<Binary>([](double u, double v) { return std::pow(u, v); }, a, parse_unary());
            return a;
        }
        NodePtr parse_atom()
        {
            skip();
            if (pos >= s.size()) fail("unexpected end");
            const char c = s[pos];
            if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
                std::size_t used = 0;
                double v = 0;
                try {
                    v = std::stod(s.substr(pos), &used);
                } catch (const std::exception&) {
                    fail("bad number");
                }
                pos += used;
                return std::make_shared<Constant>(v);
            }
            if (accept("(")) {
                NodePtr a = parse_or();
                if (!accept(")")) fail("expected ')'");
                return a;
            }
            if (!std::isalpha(static_cast<unsigned char>(c))) fail(std::string("unexpected '") + c + "'");
            std::size_t start = pos;
            while (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_')) ++pos;
            const std::string name = s.substr(start, pos - start);
            if (accept("(")) {
                std::vector<NodePtr> args{parse_or()};
                while (accept(",")) args.push_back(parse_or());
                if (!accept(")")) fail("expected ')'");
                return call(name, args);
            }
            if (name == "x" || name == "y" || name == "z") {
                const int i = name[0] - 'x';
                max_var = std::max(max_var, i);
                return std::make_shared<Variable>(static_cast<std::size_t>(i));
            }
            if (name == "pi") return std::make_shared<Constant>(std::numbers::pi);
            if (name == "e") return std::make_shared<Constant>(std::numbers::e);
            fail("unknown name '" + name + "'");
        }

        NodePtr call(const std::string& name, const std::vector<NodePtr>& args)
        {
            using F1 = double (*)(double);
            static const std::pair<const char*, F1> unary[] = {
                {"sin", [](double v) { return std::sin(v); }},   {"cos", [](double v) { return std::cos(v); }},
                {"tan", [](double v) { return std::tan(v); }},   {"exp", [](double v) { return std::exp(v); }},
                {"log", [](double v) { return std::log(v); }},   {"sqrt", [](double v) { return std::sqrt(v); }},
                {"abs", [](double v) { return std::abs(v); }},   {"tanh", [](double v) { return std::tanh(v); }},
                {"sinh", [](double v) { return std::sinh(v); }}, {"cosh", [](double v) { return std::cosh(v); }},
                {"atan", [](double v) { return std::atan(v); }}, {"asin", [](double v) { return std::asin(v); }},
                {"acos", [](double v) { return std::acos(v); }}, {"floor", [](double v) { return std::floor(v); }},
            };
            for (const auto& [n, f] : unary)
                if (name == n) {
                    if (args.size() != 1) fail(name + " takes one argument");
                    return std::make_shared<Unary>(f, args[0]);
                }
            if (args.size() == 2) {
                if (name == "min") return std::make_shared<Binary>([](double u, double v) { return std::min(u, v); }, args[0], args[1]);
                if (name == "max") return std::make_shared<Binary>([](double u, double v) { return std::max(u, v); }, args[0], args[1]);
                if (name == "pow") return std::make_shared<Binary>([](double u, double v) { return std::pow(u, v); }, args[0], args[1]);
                if (name == "atan2") return std::make_shared<Binary>([](double u, double v) { return std::atan2(u, v); }, args[0], args[1]);
            }
            fail("unknown function '" + name + "' with " + std::to_string(args.size()) + " arguments");
        }
    };

    NodePtr root_;
    std::string text_;
    int arity_ = 0;
};

/// Built-in test functions plus arbitrary expressions.
///   exp1d = e^x, exp2d = e^{xy}, exp3d = e^{xyz}
inline Expression parse_function(const std::string& spec)
{
    if (spec == "exp1d") return Expression::parse("exp(x)");
    if (spec == "exp2d") return Expression::parse("exp(x*y)");
    if (spec == "exp3d") return Expression::parse("exp(x*y*z)");
    const std::string prefix = "expr:";
    if (spec.rfind(prefix, 0) == 0) return Expression::parse(spec.substr(prefix.size()));
    return Expression::parse(spec);
}

} // namespace wavext
