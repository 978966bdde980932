#pragma once
// Small arithmetic expression parser/evaluator used for initial data,
// manufactured-solution forcing terms and steady-state probes.
//
// Grammar: variables x, y, z, t; the constant pi; numeric literals;
// binary + - * / ^ (with ^ right-associative); unary minus; parentheses;
// functions exp, sin, cos, sqrt (one argument) and min, max (two).

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace ksfv {

class ExprError : public std::runtime_error {
public:
    ExprError(const std::string& msg, std::size_t position)
        : std::runtime_error(msg + " (at position " + std::to_string(position) + ")"),
          position_(position) {}
    std::size_t position() const { return position_; }

private:
    std::size_t position_;
};

class Expression {
public:
    Expression() = default;

    // Throws ExprError with the offending position on malformed input.
    static Expression parse(const std::string& src);

    bool empty() const { return nodes_.empty(); }

    // Throws std::domain_error on sqrt of a negative value.
    double eval(double x, double y = 0.0, double z = 0.0, double t = 0.0) const;

    // Fully parenthesized rendering; parses back to an equivalent expression.
    std::string to_string() const;

    const std::string& source() const { return src_; }

private:
    enum class Op : unsigned char { add, sub, mul, div, pow, neg, var_x, var_y, var_z, var_t,
                                    constant, fn_exp, fn_sin, fn_cos, fn_sqrt, fn_min, fn_max };
    struct Node {
        Op op;
        double value = 0.0;  // constant
        int a = -1, b = -1;  // child node indices
    };

    std::vector<Node> nodes_;
    int root_ = -1;
    std::string src_;

    double eval_node(int idx, double x, double y, double z, double t) const;
    void print_node(int idx, std::string& out) const;
    friend class ExprParser;
};

}  // namespace ksfv
