#include "ksfv/expr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace ksfv {

namespace {
const double kPi = 3.14159265358979323846;
}

class ExprParser {
public:
    explicit ExprParser(const std::string& src) : src_(src) {}

    Expression run() {
        Expression e;
        e.src_ = src_;
        nodes_ = &e.nodes_;
        pos_ = 0;
        e.root_ = parse_expr();
        skip_ws();
        if (pos_ != src_.size()) throw ExprError("unexpected trailing input", pos_);
        return e;
    }

private:
    using Op = Expression::Op;

    const std::string& src_;
    std::vector<Expression::Node>* nodes_ = nullptr;
    std::size_t pos_ = 0;

    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }

    bool consume(char c) {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    int make(Op op, double value = 0.0, int a = -1, int b = -1) {
        nodes_->push_back({op, value, a, b});
        return static_cast<int>(nodes_->size()) - 1;
    }

    // expr := term (('+'|'-') term)*
    int parse_expr() {
        int lhs = parse_term();
        for (;;) {
            if (consume('+')) lhs = make(Op::add, 0.0, lhs, parse_term());
            else if (consume('-')) lhs = make(Op::sub, 0.0, lhs, parse_term());
            else return lhs;
        }
    }

    // term := unary (('*'|'/') unary)*
    int parse_term() {
        int lhs = parse_unary();
        for (;;) {
            if (consume('*')) lhs = make(Op::mul, 0.0, lhs, parse_unary());
            else if (consume('/')) lhs = make(Op::div, 0.0, lhs, parse_unary());
            else return lhs;
        }
    }

    // unary := ('+'|'-') unary | power
    int parse_unary() {
        if (consume('-')) return make(Op::neg, 0.0, parse_unary());
        if (consume('+')) return parse_unary();
        return parse_power();
    }

    // power := atom ('^' unary)?   (right-associative)
    int parse_power() {
        int base = parse_atom();
        if (consume('^')) return make(Op::pow, 0.0, base, parse_unary());
        return base;
    }

    int parse_atom() {
        skip_ws();
        if (pos_ >= src_.size()) throw ExprError("unexpected end of expression", pos_);
        char c = src_[pos_];
        if (c == '(') {
            ++pos_;
            int inner = parse_expr();
            if (!consume(')')) throw ExprError("expected ')'", pos_);
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c))) return parse_ident();
        throw ExprError(std::string("unexpected character '") + c + "'", pos_);
    }

    int parse_number() {
        const char* begin = src_.c_str() + pos_;
        char* end = nullptr;
        double v = std::strtod(begin, &end);
        if (end == begin) throw ExprError("malformed number", pos_);
        pos_ += static_cast<std::size_t>(end - begin);
        return make(Op::constant, v);
    }

    int parse_ident() {
        std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
            ++pos_;
        std::string name = src_.substr(start, pos_ - start);

        if (name == "x") return make(Op::var_x);
        if (name == "y") return make(Op::var_y);
        if (name == "z") return make(Op::var_z);
        if (name == "t") return make(Op::var_t);
        if (name == "pi") return make(Op::constant, kPi);

        Op fn;
        int arity = 1;
        if (name == "exp") fn = Op::fn_exp;
        else if (name == "sin") fn = Op::fn_sin;
        else if (name == "cos") fn = Op::fn_cos;
        else if (name == "sqrt") fn = Op::fn_sqrt;
        else if (name == "min") { fn = Op::fn_min; arity = 2; }
        else if (name == "max") { fn = Op::fn_max; arity = 2; }
        else throw ExprError("unknown identifier '" + name + "'", start);

        if (!consume('(')) throw ExprError("expected '(' after function name", pos_);
        int a = parse_expr();
        int b = -1;
        if (arity == 2) {
            if (!consume(',')) throw ExprError("expected ',' in two-argument function", pos_);
            b = parse_expr();
        }
        if (!consume(')')) throw ExprError("expected ')'", pos_);
        return make(fn, 0.0, a, b);
    }
};

Expression Expression::parse(const std::string& src) {
    return ExprParser(src).run();
}

double Expression::eval(double x, double y, double z, double t) const {
    if (root_ < 0) throw std::logic_error("Expression::eval on empty expression");
    return eval_node(root_, x, y, z, t);
}

double Expression::eval_node(int idx, double x, double y, double z, double t) const {
    const Node& n = nodes_[static_cast<std::size_t>(idx)];
    switch (n.op) {
        case Op::constant: return n.value;
        case Op::var_x: return x;
        case Op::var_y: return y;
        case Op::var_z: return z;
        case Op::var_t: return t;
        case Op::neg: return -eval_node(n.a, x, y, z, t);
        case Op::add: return eval_node(n.a, x, y, z, t) + eval_node(n.b, x, y, z, t);
        case Op::sub: return eval_node(n.a, x, y, z, t) - eval_node(n.b, x, y, z, t);
        case Op::mul: return eval_node(n.a, x, y, z, t) * eval_node(n.b, x, y, z, t);
        case Op::div: return eval_node(n.a, x, y, z, t) / eval_node(n.b, x, y, z, t);
        case Op::pow: return std::pow(eval_node(n.a, x, y, z, t), eval_node(n.b, x, y, z, t));
        case Op::fn_exp: return std::exp(eval_node(n.a, x, y, z, t));
        case Op::fn_sin: return std::sin(eval_node(n.a, x, y, z, t));
        case Op::fn_cos: return std::cos(eval_node(n.a, x, y, z, t));
        case Op::fn_sqrt: {
            double v = eval_node(n.a, x, y, z, t);
            if (v < 0.0) throw std::domain_error("sqrt of negative value");
            return std::sqrt(v);
        }
        case Op::fn_min:
            return std::min(eval_node(n.a, x, y, z, t), eval_node(n.b, x, y, z, t));
        case Op::fn_max:
            return std::max(eval_node(n.a, x, y, z, t), eval_node(n.b, x, y, z, t));
    }
    throw std::logic_error("Expression::eval_node: corrupt node");
}

std::string Expression::to_string() const {
    if (root_ < 0) return "";
    std::string out;
    print_node(root_, out);
    return out;
}

void Expression::print_node(int idx, std::string& out) const {
    const Node& n = nodes_[static_cast<std::size_t>(idx)];
    auto binary = [&](const char* op) {
        out += '(';
        print_node(n.a, out);
        out += op;
        print_node(n.b, out);
        out += ')';
    };
    auto call = [&](const char* name) {
        out += name;
        out += '(';
        print_node(n.a, out);
        if (n.b >= 0) {
            out += ',';
            print_node(n.b, out);
        }
        out += ')';
    };
    switch (n.op) {
        case Op::constant: {
            char buf[40];
            std::snprintf(buf, sizeof(buf), "%.17g", n.value);
            out += buf;
            return;
        }
        case Op::var_x: out += 'x'; return;
        case Op::var_y: out += 'y'; return;
        case Op::var_z: out += 'z'; return;
        case Op::var_t: out += 't'; return;
        case Op::neg:
            out += "(-";
            print_node(n.a, out);
            out += ')';
            return;
        case Op::add: binary("+"); return;
        case Op::sub: binary("-"); return;
        case Op::mul: binary("*"); return;
        case Op::div: binary("/"); return;
        case Op::pow: binary("^"); return;
        case Op::fn_exp: call("exp"); return;
        case Op::fn_sin: call("sin"); return;
        case Op::fn_cos: call("cos"); return;
        case Op::fn_sqrt: call("sqrt"); return;
        case Op::fn_min: call("min"); return;
        case Op::fn_max: call("max"); return;
    }
}

}  // namespace ksfv
