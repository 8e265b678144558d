#ifndef CERTIFY_EXPR_HPP
#define CERTIFY_EXPR_HPP

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "certify/interval.hpp"
#include "certify/poly.hpp"

namespace certify {

struct ParseError : std::runtime_error {
    int line, col;
    ParseError(const std::string& msg, int line_, int col_)
        : std::runtime_error(msg + " (line " + std::to_string(line_) + ", col " +
                             std::to_string(col_) + ")"),
          line(line_), col(col_) {}
};

enum class UnaryOp { neg, sin, cos, exp, log, sqrt, tanh };
enum class BinaryOp { add, sub, mul, div };

// Immutable expression tree.  Variables are indices into an external ordered
// name list (states followed by inputs).
class Expr {
public:
    enum class Kind { constant, variable, unary, binary, pow };

    Expr() : Expr(constant(0.0)) {}

    static Expr constant(double v);
    static Expr variable(std::size_t index);
    static Expr unary(UnaryOp op, Expr a);
    static Expr binary(BinaryOp op, Expr a, Expr b);
    static Expr pow(Expr base, int exponent);

    Kind kind() const { return node_->kind; }
    double const_value() const { return node_->value; }
    std::size_t var_index() const { return node_->index; }
    UnaryOp unary_op() const { return node_->uop; }
    BinaryOp binary_op() const { return node_->bop; }
    int exponent() const { return node_->exponent; }
    const Expr& child(std::size_t i) const { return node_->kids[i]; }
    std::size_t child_count() const { return node_->kids.size(); }

    bool is_const(double v) const {
        return node_->kind == Kind::constant && node_->value == v;
    }

    bool structurally_equal(const Expr& o) const;

    double eval(std::span<const double> point) const;
    Interval eval_interval(std::span<const Interval> box) const;

    // Formal derivative with constant folding and 0/1 absorption.
    Expr diff(std::size_t var) const;

    // Conversion to a sparse polynomial; nullopt when a transcendental or a
    // division by a non-constant blocks it.
    std::optional<Polynomial> to_polynomial(const std::vector<std::string>& vars) const;

    // x_i -> scale_i * x_i + offset_i inside the tree
    Expr substitute_affine(const AffineMap& map) const;

    void collect_vars(std::vector<bool>& used) const;

    std::string str(const std::vector<std::string>& names) const;

private:
    struct Node {
        Kind kind;
        double value = 0.0;       // constant
        std::size_t index = 0;    // variable
        UnaryOp uop = UnaryOp::neg;
        BinaryOp bop = BinaryOp::add;
        int exponent = 0;         // pow
        std::vector<Expr> kids;
    };

    explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
    std::shared_ptr<const Node> node_;
};

// Operating region: a per-variable box (states then inputs) plus optional
// polynomial inequalities g(x) <= 0.
struct Region {
    std::vector<Interval> box;             // one per variable
    std::vector<bool> declared;            // box interval explicitly declared
    std::vector<Polynomial> extra_ineqs;   // g <= 0, over all variables

    double radius() const;                 // max half-width over declared boxes
};

// System  x' = f(x, u), y = h(x, u)  with the origin as equilibrium.
struct SystemModel {
    std::size_t n = 0, m = 0, p = 0;
    std::vector<std::string> state_names;
    std::vector<std::string> input_names;
    std::vector<Expr> f;  // length n
    std::vector<Expr> h;  // length p
    Region region;
    std::vector<std::pair<std::string, std::string>> options;  // option lines, in order

    std::vector<std::string> all_vars() const;  // states then inputs
    bool any_input_declared() const;
};

// Parse the system-definition DSL; throws ParseError with line/column info.
SystemModel parse_system(const std::string& text);

// Regenerate DSL source from a model (round-trip companion to parse_system).
std::string print_system(const SystemModel& model);

} // namespace certify

#endif
