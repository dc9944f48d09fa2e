#pragma once

#include <cctype>
#include <cmath>
#include <memory>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

// Minimal arithmetic expression grammar for user-supplied coefficient fields:
// +, -, *, /, unary minus, parentheses, sin, cos, sqrt, the constant pi,
// numeric literals, and the bound parameter names. Parsed once into a small
// tree, evaluated against a parameter tuple.

namespace qgeo {

struct expr_error : std::invalid_argument {
    explicit expr_error(const std::string& what) : std::invalid_argument(what) {}
};

class CompiledExpr {
public:
    double evaluate(std::span<const double> params) const {
        return eval_node(root_, params);
    }

    static CompiledExpr parse(const std::string& text, const std::vector<std::string>& names) {
        Parser p{text, names, 0};
        CompiledExpr e;
        e.root_ = p.parse_sum();
        p.skip_ws();
        if (p.pos != text.size())
            throw expr_error("expression: trailing input at position " + std::to_string(p.pos));
        return e;
    }

private:
    enum class Op { constant, param, add, sub, mul, div, neg, sin, cos, sqrt };

    struct Node {
        Op op;
        double value = 0.0;       // constant
        std::size_t index = 0;    // param
        std::shared_ptr<Node> lhs, rhs;
    };

    using NodePtr = std::shared_ptr<Node>;
    NodePtr root_;

    static double eval_node(const NodePtr& n, std::span<const double> p) {
        switch (n->op) {
            case Op::constant: return n->value;
            case Op::param: return p[n->index];
            case Op::add: return eval_node(n->lhs, p) + eval_node(n->rhs, p);
            case Op::sub: return eval_node(n->lhs, p) - eval_node(n->rhs, p);
            case Op::mul: return eval_node(n->lhs, p) * eval_node(n->rhs, p);
            case Op::div: return eval_node(n->lhs, p) / eval_node(n->rhs, p);
            case Op::neg: return -eval_node(n->lhs, p);
            case Op::sin: return std::sin(eval_node(n->lhs, p));
            case Op::cos: return std::cos(eval_node(n->lhs, p));
            case Op::sqrt: return std::sqrt(eval_node(n->lhs, p));
        }
        throw expr_error("expression: corrupt node");
    }

    struct Parser {
        const std::string& s;
        const std::vector<std::string>& names;
        std::size_t pos;

        void skip_ws() {
            while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
        }

        bool consume(char c) {
            skip_ws();
            if (pos < s.size() && s[pos] == c) {
                ++pos;
                return true;
            }
            return false;
        }

        NodePtr make(Op op, NodePtr l = nullptr, NodePtr r = nullptr) {
            auto n = std::make_shared<Node>();
            n->op = op;
            n->lhs = std::move(l);
            n->rhs = std::move(r);
            return n;
        }

        NodePtr parse_sum() {
            NodePtr lhs = parse_product();
            for (;;) {
                if (consume('+'))
                    lhs = make(Op::add, std::move(lhs), parse_product());
                else if (consume('-'))
                    lhs = make(Op::sub, std::move(lhs), parse_product());
                else
                    return lhs;
            }
        }

        NodePtr parse_product() {
            NodePtr lhs = parse_unary();
            for (;;) {
                if (consume('*'))
                    lhs = make(Op::mul, std::move(lhs), parse_unary());
                else if (consume('/'))
                    lhs = make(Op::div, std::move(lhs), parse_unary());
                else
                    return lhs;
            }
        }

        NodePtr parse_unary() {
            if (consume('-')) return make(Op::neg, parse_unary());
            if (consume('+')) return parse_unary();
            return parse_primary();
        }

        NodePtr parse_primary() {
            skip_ws();
            if (pos >= s.size()) throw expr_error("expression: unexpected end of input");
            const char c = s[pos];
            if (c == '(') {
                ++pos;
                NodePtr inner = parse_sum();
                if (!consume(')')) throw expr_error("expression: missing ')'");
                return inner;
            }
            if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_ident();
            throw expr_error(std::string("expression: unexpected character '") + c +
                             "' at position " + std::to_string(pos));
        }

        NodePtr parse_number() {
            const char* begin = s.c_str() + pos;
            char* end = nullptr;
            const double v = std::strtod(begin, &end);
            if (end == begin) throw expr_error("expression: bad number");
            pos += static_cast<std::size_t>(end - begin);
            auto n = make(Op::constant);
            n->value = v;
            return n;
        }

        NodePtr parse_ident() {
            const std::size_t start = pos;
            while (pos < s.size() &&
                   (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_'))
                ++pos;
            const std::string name = s.substr(start, pos - start);
            if (name == "pi") {
                auto n = make(Op::constant);
                n->value = std::numbers::pi;
                return n;
            }
            if (name == "sin" || name == "cos" || name == "sqrt") {
                if (!consume('(')) throw expr_error("expression: '" + name + "' needs '('");
                NodePtr arg = parse_sum();
                if (!consume(')')) throw expr_error("expression: missing ')' after " + name);
                const Op op = name == "sin" ? Op::sin : (name == "cos" ? Op::cos : Op::sqrt);
                return make(op, std::move(arg));
            }
            for (std::size_t i = 0; i < names.size(); ++i) {
                if (names[i] == name) {
                    auto n = make(Op::param);
                    n->index = i;
                    return n;
                }
            }
            throw expr_error("expression: unknown identifier '" + name + "'");
        }
    };
};

/// Evaluate a parameter-free expression (step lists such as "pi/3").
inline double evaluate_scalar_expression(const std::string& text) {
    return CompiledExpr::parse(text, {}).evaluate({});
}

}  // namespace qgeo
