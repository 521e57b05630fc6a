#include "bellman/expr.hpp"

#include <cctype>
#include <cmath>
#include <charconv>
#include <stdexcept>

namespace bellman {

namespace {

[[noreturn]] void fail(std::string_view src, std::size_t pos, const std::string& what) {
    throw std::invalid_argument("expression error at position " + std::to_string(pos) + ": " +
                                what + " in \"" + std::string(src) + "\"");
}

}  // namespace

class ExprParser {
public:
    ExprParser(std::string_view src, int dim) : src_(src), dim_(dim) {}

    Expr run() {
        Expr e;
        e.source_ = std::string(src_);
        parse_expr(e.program_);
        skip_ws();
        if (pos_ != src_.size()) fail(src_, pos_, "unexpected trailing input");
        // Stack depth bound for eval.
        int depth = 0, max_depth = 0;
        for (const auto& n : e.program_) {
            switch (n.op) {
                case Expr::Op::push_const:
                case Expr::Op::push_t:
                case Expr::Op::push_x:
                    ++depth;
                    break;
                case Expr::Op::add:
                case Expr::Op::sub:
                case Expr::Op::mul:
                case Expr::Op::min2:
                case Expr::Op::max2:
                    --depth;
                    break;
                default:
                    break;  // unary: depth unchanged
            }
            max_depth = std::max(max_depth, depth);
        }
        e.max_stack_ = max_depth;
        if (max_depth > 64) fail(src_, 0, "expression too deep");
        return e;
    }

private:
    using Op = Expr::Op;

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

    // expr := term (('+'|'-') term)*
    void parse_expr(std::vector<Expr::Node>& out) {
        parse_term(out);
        for (;;) {
            skip_ws();
            if (consume('+')) {
                parse_term(out);
                out.push_back({Op::add});
            } else if (consume('-')) {
                parse_term(out);
                out.push_back({Op::sub});
            } else {
                return;
            }
        }
    }

    // term := factor ('*' factor)*
    void parse_term(std::vector<Expr::Node>& out) {
        parse_factor(out);
        while (consume('*')) {
            parse_factor(out);
            out.push_back({Op::mul});
        }
    }

    // factor := number | 't' | 'x'<idx> | fn '(' args ')' | '(' expr ')' | '-' factor
    void parse_factor(std::vector<Expr::Node>& out) {
        skip_ws();
        if (pos_ >= src_.size()) fail(src_, pos_, "unexpected end of input");
        const char c = src_[pos_];
        if (c == '-') {
            ++pos_;
            parse_factor(out);
            out.push_back({Op::neg});
            return;
        }
        if (c == '(') {
            ++pos_;
            parse_expr(out);
            if (!consume(')')) fail(src_, pos_, "expected ')'");
            return;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            parse_number(out);
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            parse_identifier(out);
            return;
        }
        fail(src_, pos_, std::string("unexpected character '") + c + "'");
    }

    void parse_number(std::vector<Expr::Node>& out) {
        double value = 0.0;
        const char* begin = src_.data() + pos_;
        const char* end = src_.data() + src_.size();
        auto [ptr, ec] = std::from_chars(begin, end, value);
        if (ec != std::errc{}) fail(src_, pos_, "malformed number");
        pos_ += static_cast<std::size_t>(ptr - begin);
        out.push_back({Op::push_const, value});
    }

    void parse_identifier(std::vector<Expr::Node>& out) {
        const std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
            ++pos_;
        const std::string_view name = src_.substr(start, pos_ - start);

        if (name == "t") {
            out.push_back({Op::push_t});
            return;
        }
        if (name.size() >= 2 && name[0] == 'x') {
            int idx = 0;
            auto [ptr, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), idx);
            if (ec == std::errc{} && ptr == name.data() + name.size()) {
                if (idx < 1 || idx > dim_)
                    fail(src_, start, "variable " + std::string(name) + " out of range (dim=" +
                                          std::to_string(dim_) + ")");
                out.push_back({Op::push_x, 0.0, idx - 1});
                return;
            }
        }

        Op op;
        int arity;
        if (name == "min") { op = Op::min2; arity = 2; }
        else if (name == "max") { op = Op::max2; arity = 2; }
        else if (name == "abs") { op = Op::abs1; arity = 1; }
        else if (name == "sin") { op = Op::sin1; arity = 1; }
        else if (name == "cos") { op = Op::cos1; arity = 1; }
        else if (name == "exp") { op = Op::exp1; arity = 1; }
        else fail(src_, start, "unknown identifier '" + std::string(name) + "'");

        if (!consume('(')) fail(src_, pos_, "expected '(' after function name");
        parse_expr(out);
        if (arity == 2) {
            if (!consume(',')) fail(src_, pos_, "expected ',' in two-argument function");
            parse_expr(out);
        }
        if (!consume(')')) fail(src_, pos_, "expected ')'");
        out.push_back({op});
    }

    std::string_view src_;
    int dim_;
    std::size_t pos_ = 0;
};

Expr Expr::parse(std::string_view src, int dim) { return ExprParser(src, dim).run(); }

double Expr::eval(double t, std::span<const double> x) const {
    double stack[64];
    int top = -1;
    for (const Node& n : program_) {
        switch (n.op) {
            case Op::push_const: stack[++top] = n.value; break;
            case Op::push_t: stack[++top] = t; break;
            case Op::push_x: stack[++top] = x[n.var]; break;
            case Op::add: --top; stack[top] += stack[top + 1]; break;
            case Op::sub: --top; stack[top] -= stack[top + 1]; break;
            case Op::mul: --top; stack[top] *= stack[top + 1]; break;
            case Op::neg: stack[top] = -stack[top]; break;
            case Op::min2: --top; stack[top] = std::min(stack[top], stack[top + 1]); break;
            case Op::max2: --top; stack[top] = std::max(stack[top], stack[top + 1]); break;
            case Op::abs1: stack[top] = std::abs(stack[top]); break;
            case Op::sin1: stack[top] = std::sin(stack[top]); break;
            case Op::cos1: stack[top] = std::cos(stack[top]); break;
            case Op::exp1: stack[top] = std::exp(stack[top]); break;
        }
    }
    return top >= 0 ? stack[top] : 0.0;
}

}  // namespace bellman
