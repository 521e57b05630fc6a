#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bellman {

/// A compiled coefficient expression over variables t, x1..xd with
/// operators +, -, * and the functions min, max, abs, sin, cos, exp.
/// Immutable after parse; eval is pure and reentrant.
class Expr {
public:
    /// Parses `src` for a problem of spatial dimension `dim`.
    /// Throws std::invalid_argument with a position on syntax errors.
    static Expr parse(std::string_view src, int dim);

    double eval(double t, std::span<const double> x) const;

    const std::string& source() const { return source_; }

private:
    enum class Op : std::uint8_t {
        push_const,
        push_t,
        push_x,
        add,
        sub,
        mul,
        neg,
        min2,
        max2,
        abs1,
        sin1,
        cos1,
        exp1,
    };

    struct Node {
        Op op;
        double value = 0.0;
        int var = 0;
    };

    friend class ExprParser;

    std::vector<Node> program_;  // postfix
    int max_stack_ = 0;
    std::string source_;
};

}  // namespace bellman
