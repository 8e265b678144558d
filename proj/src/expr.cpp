#include "certify/expr.hpp"

#include <cmath>
#include <algorithm>

namespace certify {

Expr Expr::constant(double v) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::constant;
    n->value = v;
    return Expr(std::move(n));
}

Expr Expr::variable(std::size_t index) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::variable;
    n->index = index;
    return Expr(std::move(n));
}

Expr Expr::unary(UnaryOp op, Expr a) {
    if (a.kind() == Kind::constant) {
        const double v = a.const_value();
        switch (op) {
            case UnaryOp::neg: return constant(-v);
            case UnaryOp::sin: return constant(std::sin(v));
            case UnaryOp::cos: return constant(std::cos(v));
            case UnaryOp::exp: return constant(std::exp(v));
            case UnaryOp::log: return constant(std::log(v));
            case UnaryOp::sqrt: return constant(std::sqrt(v));
            case UnaryOp::tanh: return constant(std::tanh(v));
        }
    }
    if (op == UnaryOp::neg && a.kind() == Kind::unary && a.unary_op() == UnaryOp::neg)
        return a.child(0);
    auto n = std::make_shared<Node>();
    n->kind = Kind::unary;
    n->uop = op;
    n->kids.push_back(std::move(a));
    return Expr(std::move(n));
}

Expr Expr::binary(BinaryOp op, Expr a, Expr b) {
    const bool ca = a.kind() == Kind::constant, cb = b.kind() == Kind::constant;
    if (ca && cb) {
        const double x = a.const_value(), y = b.const_value();
        switch (op) {
            case BinaryOp::add: return constant(x + y);
            case BinaryOp::sub: return constant(x - y);
            case BinaryOp::mul: return constant(x * y);
            case BinaryOp::div: return constant(x / y);
        }
    }
    switch (op) {
        case BinaryOp::add:
            if (ca && a.const_value() == 0.0) return b;
            if (cb && b.const_value() == 0.0) return a;
            break;
        case BinaryOp::sub:
            if (cb && b.const_value() == 0.0) return a;
            if (ca && a.const_value() == 0.0) return unary(UnaryOp::neg, b);
            break;
        case BinaryOp::mul:
            if ((ca && a.const_value() == 0.0) || (cb && b.const_value() == 0.0))
                return constant(0.0);
            if (ca && a.const_value() == 1.0) return b;
            if (cb && b.const_value() == 1.0) return a;
            if (ca && a.const_value() == -1.0) return unary(UnaryOp::neg, b);
            if (cb && b.const_value() == -1.0) return unary(UnaryOp::neg, a);
            break;
        case BinaryOp::div:
            if (ca && a.const_value() == 0.0) return constant(0.0);
            if (cb && b.const_value() == 1.0) return a;
            break;
    }
    auto n = std::make_shared<Node>();
    n->kind = Kind::binary;
    n->bop = op;
    n->kids.push_back(std::move(a));
    n->kids.push_back(std::move(b));
    return Expr(std::move(n));
}

Expr Expr::pow(Expr base, int exponent) {
    if (exponent < 0) throw PolyError("pow: negative exponents are not supported");
    if (exponent == 0) return constant(1.0);
    if (exponent == 1) return base;
    if (base.kind() == Kind::constant) return constant(std::pow(base.const_value(), exponent));
    auto n = std::make_shared<Node>();
    n->kind = Kind::pow;
    n->exponent = exponent;
    n->kids.push_back(std::move(base));
    return Expr(std::move(n));
}

bool Expr::structurally_equal(const Expr& o) const {
    if (node_ == o.node_) return true;
    if (kind() != o.kind()) return false;
    switch (kind()) {
        case Kind::constant: return const_value() == o.const_value();
        case Kind::variable: return var_index() == o.var_index();
        case Kind::unary:
            return unary_op() == o.unary_op() && child(0).structurally_equal(o.child(0));
        case Kind::binary:
            return binary_op() == o.binary_op() && child(0).structurally_equal(o.child(0)) &&
                   child(1).structurally_equal(o.child(1));
        case Kind::pow:
            return exponent() == o.exponent() && child(0).structurally_equal(o.child(0));
    }
    return false;
}

double Expr::eval(std::span<const double> point) const {
    switch (kind()) {
        case Kind::constant: return const_value();
        case Kind::variable: return point[var_index()];
        case Kind::unary: {
            const double v = child(0).eval(point);
            switch (unary_op()) {
                case UnaryOp::neg: return -v;
                case UnaryOp::sin: return std::sin(v);
                case UnaryOp::cos: return std::cos(v);
                case UnaryOp::exp: return std::exp(v);
                case UnaryOp::log: return std::log(v);
                case UnaryOp::sqrt: return std::sqrt(v);
                case UnaryOp::tanh: return std::tanh(v);
            }
            return 0.0;
        }
        case Kind::binary: {
            const double a = child(0).eval(point), b = child(1).eval(point);
            switch (binary_op()) {
                case BinaryOp::add: return a + b;
                case BinaryOp::sub: return a - b;
                case BinaryOp::mul: return a * b;
                case BinaryOp::div: return a / b;
            }
            return 0.0;
        }
        case Kind::pow: {
            const double b = child(0).eval(point);
            double r = 1.0;
            for (int i = 0; i < exponent(); ++i) r *= b;
            return r;
        }
    }
    return 0.0;
}

Interval Expr::eval_interval(std::span<const Interval> box) const {
    switch (kind()) {
        case Kind::constant: return Interval(const_value());
        case Kind::variable: return box[var_index()];
        case Kind::unary: {
            const Interval v = child(0).eval_interval(box);
            switch (unary_op()) {
                case UnaryOp::neg: return -v;
                case UnaryOp::sin: return certify::sin(v);
                case UnaryOp::cos: return certify::cos(v);
                case UnaryOp::exp: return certify::exp(v);
                case UnaryOp::log: return certify::log(v);
                case UnaryOp::sqrt: return certify::sqrt(v);
                case UnaryOp::tanh: return certify::tanh(v);
            }
            return Interval();
        }
        case Kind::binary: {
            const Interval a = child(0).eval_interval(box);
            const Interval b = child(1).eval_interval(box);
            switch (binary_op()) {
                case BinaryOp::add: return a + b;
                case BinaryOp::sub: return a - b;
                case BinaryOp::mul: return a * b;
                case BinaryOp::div: return a / b;
            }
            return Interval();
        }
        case Kind::pow:
            return int_pow(child(0).eval_interval(box), exponent());
    }
    return Interval();
}

Expr Expr::diff(std::size_t var) const {
    switch (kind()) {
        case Kind::constant: return constant(0.0);
        case Kind::variable: return constant(var_index() == var ? 1.0 : 0.0);
        case Kind::unary: {
            const Expr& a = child(0);
            const Expr da = a.diff(var);
            switch (unary_op()) {
                case UnaryOp::neg: return unary(UnaryOp::neg, da);
                case UnaryOp::sin: return binary(BinaryOp::mul, unary(UnaryOp::cos, a), da);
                case UnaryOp::cos:
                    return unary(UnaryOp::neg,
                                 binary(BinaryOp::mul, unary(UnaryOp::sin, a), da));
                case UnaryOp::exp: return binary(BinaryOp::mul, unary(UnaryOp::exp, a), da);
                case UnaryOp::log: return binary(BinaryOp::div, da, a);
                case UnaryOp::sqrt:
                    return binary(BinaryOp::div, da,
                                  binary(BinaryOp::mul, constant(2.0), unary(UnaryOp::sqrt, a)));
                case UnaryOp::tanh: {
                    // 1 - tanh^2
                    const Expr t = unary(UnaryOp::tanh, a);
                    return binary(BinaryOp::mul,
                                  binary(BinaryOp::sub, constant(1.0), pow(t, 2)), da);
                }
            }
            return constant(0.0);
        }
        case Kind::binary: {
            const Expr& a = child(0);
            const Expr& b = child(1);
            const Expr da = a.diff(var), db = b.diff(var);
            switch (binary_op()) {
                case BinaryOp::add: return binary(BinaryOp::add, da, db);
                case BinaryOp::sub: return binary(BinaryOp::sub, da, db);
                case BinaryOp::mul:
                    return binary(BinaryOp::add, binary(BinaryOp::mul, da, b),
                                  binary(BinaryOp::mul, a, db));
                case BinaryOp::div:
                    // (da*b - a*db) / b^2
                    return binary(BinaryOp::div,
                                  binary(BinaryOp::sub, binary(BinaryOp::mul, da, b),
                                         binary(BinaryOp::mul, a, db)),
                                  pow(b, 2));
            }
            return constant(0.0);
        }
        case Kind::pow: {
            const Expr& a = child(0);
            const Expr da = a.diff(var);
            return binary(BinaryOp::mul,
                          binary(BinaryOp::mul, constant(double(exponent())),
                                 pow(a, exponent() - 1)),
                          da);
        }
    }
    return constant(0.0);
}

std::optional<Polynomial> Expr::to_polynomial(const std::vector<std::string>& vars) const {
    switch (kind()) {
        case Kind::constant: return Polynomial::constant(vars, const_value());
        case Kind::variable:
            if (var_index() >= vars.size()) return std::nullopt;
            return Polynomial::variable(vars, var_index());
        case Kind::unary: {
            if (unary_op() != UnaryOp::neg) return std::nullopt;
            auto a = child(0).to_polynomial(vars);
            if (!a) return std::nullopt;
            return -*a;
        }
        case Kind::binary: {
            if (binary_op() == BinaryOp::div) {
                if (child(1).kind() != Kind::constant) return std::nullopt;
                auto a = child(0).to_polynomial(vars);
                if (!a) return std::nullopt;
                return *a * (1.0 / child(1).const_value());
            }
            auto a = child(0).to_polynomial(vars);
            auto b = child(1).to_polynomial(vars);
            if (!a || !b) return std::nullopt;
            switch (binary_op()) {
                case BinaryOp::add: return *a + *b;
                case BinaryOp::sub: return *a - *b;
                case BinaryOp::mul: return *a * *b;
                default: return std::nullopt;
            }
        }
        case Kind::pow: {
            auto a = child(0).to_polynomial(vars);
            if (!a) return std::nullopt;
            Polynomial r = Polynomial::constant(vars, 1.0);
            for (int i = 0; i < exponent(); ++i) r = r * *a;
            return r;
        }
    }
    return std::nullopt;
}

Expr Expr::substitute_affine(const AffineMap& map) const {
    switch (kind()) {
        case Kind::constant: return *this;
        case Kind::variable: {
            const std::size_t i = var_index();
            Expr v = variable(i);
            if (map.scale[i] != 1.0) v = binary(BinaryOp::mul, constant(map.scale[i]), v);
            if (map.offset[i] != 0.0) v = binary(BinaryOp::add, v, constant(map.offset[i]));
            return v;
        }
        case Kind::unary: return unary(unary_op(), child(0).substitute_affine(map));
        case Kind::binary:
            return binary(binary_op(), child(0).substitute_affine(map),
                          child(1).substitute_affine(map));
        case Kind::pow: return pow(child(0).substitute_affine(map), exponent());
    }
    return *this;
}

void Expr::collect_vars(std::vector<bool>& used) const {
    switch (kind()) {
        case Kind::constant: return;
        case Kind::variable:
            if (var_index() < used.size()) used[var_index()] = true;
            return;
        default:
            for (std::size_t i = 0; i < child_count(); ++i) child(i).collect_vars(used);
    }
}

namespace {
const char* unary_name(UnaryOp op) {
    switch (op) {
        case UnaryOp::neg: return "-";
        case UnaryOp::sin: return "sin";
        case UnaryOp::cos: return "cos";
        case UnaryOp::exp: return "exp";
        case UnaryOp::log: return "log";
        case UnaryOp::sqrt: return "sqrt";
        case UnaryOp::tanh: return "tanh";
    }
    return "?";
}
} // namespace

std::string Expr::str(const std::vector<std::string>& names) const {
    switch (kind()) {
        case Kind::constant: {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.17g", const_value());
            return buf;
        }
        case Kind::variable: return names[var_index()];
        case Kind::unary:
            if (unary_op() == UnaryOp::neg) return "(-" + child(0).str(names) + ")";
            return std::string(unary_name(unary_op())) + "(" + child(0).str(names) + ")";
        case Kind::binary: {
            const char* op = binary_op() == BinaryOp::add   ? " + "
                             : binary_op() == BinaryOp::sub ? " - "
                             : binary_op() == BinaryOp::mul ? "*"
                                                            : "/";
            return "(" + child(0).str(names) + op + child(1).str(names) + ")";
        }
        case Kind::pow:
            return "(" + child(0).str(names) + ")^" + std::to_string(exponent());
    }
    return "?";
}

double Region::radius() const {
    double r = 0.0;
    for (std::size_t i = 0; i < box.size(); ++i)
        if (i >= declared.size() || declared[i])
            r = std::max(r, std::max(std::fabs(box[i].lo), std::fabs(box[i].hi)));
    return r;
}

std::vector<std::string> SystemModel::all_vars() const {
    std::vector<std::string> v = state_names;
    v.insert(v.end(), input_names.begin(), input_names.end());
    return v;
}

bool SystemModel::any_input_declared() const {
    for (std::size_t j = 0; j < m; ++j)
        if (region.declared[n + j]) return true;
    return false;
}

} // namespace certify
