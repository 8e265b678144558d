#include "certify/poly.hpp"

#include <cmath>
#include <cstdio>
#include <algorithm>
#include <limits>

namespace certify {

Polynomial Polynomial::constant(std::vector<std::string> vars, double c) {
    Polynomial p(std::move(vars));
    p.add_term(MultiIndex(p.vars_.size()), c);
    return p;
}

Polynomial Polynomial::variable(std::vector<std::string> vars, std::size_t index) {
    Polynomial p(std::move(vars));
    if (index >= p.vars_.size()) throw PolyError("variable index out of range");
    MultiIndex mi(p.vars_.size());
    mi[index] = 1;
    p.add_term(mi, 1.0);
    return p;
}

Polynomial Polynomial::monomial(std::vector<std::string> vars, MultiIndex mi, double c) {
    Polynomial p(std::move(vars));
    if (mi.size() != p.vars_.size()) throw PolyError("monomial arity mismatch");
    p.add_term(mi, c);
    return p;
}

int Polynomial::degree() const {
    if (terms_.empty()) return std::numeric_limits<int>::min();
    return terms_.rbegin()->first.total_degree();
}

int Polynomial::degree_in(std::size_t var) const {
    int d = 0;
    for (const auto& [mi, c] : terms_) d = std::max(d, static_cast<int>(mi[var]));
    return d;
}

int Polynomial::min_degree() const {
    if (terms_.empty()) return 0;
    return terms_.begin()->first.total_degree();
}

int Polynomial::min_degree_in(std::size_t var) const {
    if (terms_.empty()) return 0;
    int d = std::numeric_limits<int>::max();
    for (const auto& [mi, c] : terms_) d = std::min(d, static_cast<int>(mi[var]));
    return d;
}

double Polynomial::coeff(const MultiIndex& mi) const {
    auto it = terms_.find(mi);
    return it == terms_.end() ? 0.0 : it->second;
}

void Polynomial::add_term(const MultiIndex& mi, double c) {
    if (mi.size() != vars_.size()) throw PolyError("term arity mismatch");
    if (c == 0.0) return;
    auto [it, inserted] = terms_.emplace(mi, c);
    if (!inserted) {
        it->second += c;
        if (std::fabs(it->second) < kCoeffPurge) terms_.erase(it);
    }
}

void Polynomial::check_vars(const Polynomial& o) const {
    if (vars_ != o.vars_) throw PolyError("polynomial variable lists differ");
}

Polynomial Polynomial::operator+(const Polynomial& o) const {
    check_vars(o);
    Polynomial r = *this;
    for (const auto& [mi, c] : o.terms_) r.add_term(mi, c);
    return r;
}

Polynomial Polynomial::operator-(const Polynomial& o) const {
    check_vars(o);
    Polynomial r = *this;
    for (const auto& [mi, c] : o.terms_) r.add_term(mi, -c);
    return r;
}

Polynomial Polynomial::operator*(const Polynomial& o) const {
    check_vars(o);
    Polynomial r(vars_);
    for (const auto& [ma, ca] : terms_) {
        for (const auto& [mb, cb] : o.terms_) {
            MultiIndex m(vars_.size());
            for (std::size_t i = 0; i < vars_.size(); ++i) m[i] = ma[i] + mb[i];
            r.add_term(m, ca * cb);
        }
    }
    return r;
}

Polynomial Polynomial::operator*(double s) const {
    Polynomial r(vars_);
    if (s == 0.0) return r;
    for (const auto& [mi, c] : terms_) r.add_term(mi, c * s);
    return r;
}

Polynomial Polynomial::derivative(std::size_t var) const {
    if (var >= vars_.size()) throw PolyError("derivative: variable index out of range");
    Polynomial r(vars_);
    for (const auto& [mi, c] : terms_) {
        if (mi[var] == 0) continue;
        MultiIndex m = mi;
        const double k = m[var];
        m[var] -= 1;
        r.add_term(m, c * k);
    }
    return r;
}

Polynomial Polynomial::derivative(const std::string& var_name) const {
    for (std::size_t i = 0; i < vars_.size(); ++i)
        if (vars_[i] == var_name) return derivative(i);
    throw PolyError("derivative: unknown variable '" + var_name + "'");
}

namespace {

// Recursive Horner over the variable list: split the (grlex-sorted) terms by
// the exponent of `var`, evaluate each bucket on the remaining variables,
// then fold with powers of point[var] from the highest exponent down.
double eval_rec(const std::vector<std::pair<const MultiIndex*, double>>& terms,
                std::size_t var, std::size_t nvars, std::span<const double> point) {
    if (terms.empty()) return 0.0;
    if (var == nvars) return terms.front().second;

    // bucket by exponent of `var`, descending
    std::map<uint32_t, std::vector<std::pair<const MultiIndex*, double>>, std::greater<>> buckets;
    for (const auto& t : terms) buckets[(*t.first)[var]].push_back(t);

    double acc = 0.0;
    uint32_t prev_exp = 0;
    bool first = true;
    for (const auto& [e, bucket] : buckets) {
        if (first) {
            prev_exp = e;
            acc = eval_rec(bucket, var + 1, nvars, point);
            first = false;
            continue;
        }
        for (uint32_t p = prev_exp; p > e; --p) acc *= point[var];
        acc += eval_rec(bucket, var + 1, nvars, point);
        prev_exp = e;
    }
    for (uint32_t p = prev_exp; p > 0; --p) acc *= point[var];
    return acc;
}

} // namespace

double Polynomial::eval(std::span<const double> point) const {
    if (point.size() != vars_.size()) throw PolyError("eval: point dimension mismatch");
    std::vector<std::pair<const MultiIndex*, double>> flat;
    flat.reserve(terms_.size());
    for (const auto& [mi, c] : terms_) flat.emplace_back(&mi, c);
    return eval_rec(flat, 0, vars_.size(), point);
}

std::string format_coeff(double c) {
    char buf[64];
    const double a = std::fabs(c);
    if (a != 0.0 && (a < 1e-3 || a >= 1e7))
        std::snprintf(buf, sizeof buf, "%.6e", c);
    else
        std::snprintf(buf, sizeof buf, "%.6f", c);
    return buf;
}

std::string Polynomial::str() const {
    if (terms_.empty()) return "0";
    std::string out;
    // descending graded-lex
    for (auto it = terms_.rbegin(); it != terms_.rend(); ++it) {
        const auto& [mi, c] = *it;
        if (out.empty()) {
            out += (c < 0 ? "-" : "");
        } else {
            out += (c < 0 ? " - " : " + ");
        }
        out += format_coeff(std::fabs(c));
        for (std::size_t v = 0; v < vars_.size(); ++v) {
            if (mi[v] == 0) continue;
            out += "*" + vars_[v];
            if (mi[v] > 1) out += "^" + std::to_string(mi[v]);
        }
    }
    return out;
}

Polynomial poly_arith(const Polynomial& a, const Polynomial& b, PolyOp op) {
    switch (op) {
        case PolyOp::add: return a + b;
        case PolyOp::sub: return a - b;
        case PolyOp::mul: return a * b;
    }
    throw PolyError("poly_arith: bad op");
}

AffineMap::AffineMap(std::vector<double> s, std::vector<double> o)
    : scale(std::move(s)), offset(std::move(o)) {
    if (scale.size() != offset.size()) throw PolyError("AffineMap: size mismatch");
    for (double v : scale)
        if (v == 0.0) throw PolyError("AffineMap: zero scale factor");
}

AffineMap AffineMap::identity(std::size_t n) {
    return AffineMap(std::vector<double>(n, 1.0), std::vector<double>(n, 0.0));
}

AffineMap AffineMap::inverse() const {
    std::vector<double> s(scale.size()), o(scale.size());
    for (std::size_t i = 0; i < scale.size(); ++i) {
        s[i] = 1.0 / scale[i];
        o[i] = -offset[i] / scale[i];
    }
    return AffineMap(std::move(s), std::move(o));
}

std::vector<double> AffineMap::apply(std::span<const double> x) const {
    if (x.size() != scale.size()) throw PolyError("AffineMap::apply: dimension mismatch");
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = scale[i] * x[i] + offset[i];
    return y;
}

Polynomial poly_compose_affine(const Polynomial& p, const AffineMap& map) {
    if (map.scale.size() != p.vars().size())
        throw PolyError("poly_compose_affine: map does not cover all variables");
    // cache (scale_v * x_v + offset_v)^e per variable
    std::vector<std::vector<Polynomial>> pows(p.vars().size());
    for (std::size_t v = 0; v < p.vars().size(); ++v) {
        Polynomial lin(p.vars());
        MultiIndex mi(p.vars().size());
        mi[v] = 1;
        lin.add_term(mi, map.scale[v]);
        lin.add_term(MultiIndex(p.vars().size()), map.offset[v]);
        pows[v].push_back(Polynomial::constant(p.vars(), 1.0));
        pows[v].push_back(lin);
    }
    auto power = [&](std::size_t v, uint32_t e) -> const Polynomial& {
        while (pows[v].size() <= e) pows[v].push_back(pows[v].back() * pows[v][1]);
        return pows[v][e];
    };
    Polynomial out(p.vars());
    for (const auto& [mi, c] : p.terms()) {
        Polynomial term = Polynomial::constant(p.vars(), c);
        for (std::size_t v = 0; v < p.vars().size(); ++v)
            if (mi[v] > 0) term = term * power(v, mi[v]);
        out = out + term;
    }
    return out;
}

namespace {

void enumerate_rec(std::size_t var, int remaining, int min_total, int spent,
                   const std::vector<int>* caps, MultiIndex& cur,
                   std::vector<MultiIndex>& out) {
    if (var + 1 == cur.size()) {
        const int cap = caps ? std::min(remaining, (*caps)[var]) : remaining;
        for (int e = 0; e <= cap; ++e) {
            if (spent + e < min_total) continue;
            cur[var] = static_cast<uint32_t>(e);
            out.push_back(cur);
        }
        cur[var] = 0;
        return;
    }
    const int cap = caps ? std::min(remaining, (*caps)[var]) : remaining;
    for (int e = 0; e <= cap; ++e) {
        cur[var] = static_cast<uint32_t>(e);
        enumerate_rec(var + 1, remaining - e, min_total, spent + e, caps, cur, out);
    }
    cur[var] = 0;
}

} // namespace

std::vector<MultiIndex> monomial_basis(std::size_t nvars, int max_degree) {
    if (max_degree < 0) throw PolyError("monomial_basis: negative degree");
    std::vector<MultiIndex> out;
    if (nvars == 0) {
        out.emplace_back(0);
        return out;
    }
    MultiIndex cur(nvars);
    enumerate_rec(0, max_degree, 0, 0, nullptr, cur, out);
    std::sort(out.begin(), out.end(), GrlexLess{});
    return out;
}

std::vector<MultiIndex> monomial_basis_box(std::size_t nvars, int max_degree,
                                           const std::vector<int>& var_caps,
                                           int min_total) {
    if (max_degree < 0) return {};
    std::vector<MultiIndex> out;
    if (nvars == 0) {
        if (min_total <= 0) out.emplace_back(0);
        return out;
    }
    MultiIndex cur(nvars);
    enumerate_rec(0, max_degree, min_total, 0, &var_caps, cur, out);
    std::sort(out.begin(), out.end(), GrlexLess{});
    return out;
}

uint64_t binomial(unsigned n, unsigned k) {
    if (k > n) return 0;
    if (k > n - k) k = n - k;
    if (n <= 50) {
        uint64_t r = 1;
        for (unsigned i = 1; i <= k; ++i) {
            r = r * (n - k + i) / i;
        }
        return r;
    }
    // log-gamma for large degrees; overflow-safe at the cost of exactness
    const double lg = std::lgamma(double(n) + 1) - std::lgamma(double(k) + 1) -
                      std::lgamma(double(n - k) + 1);
    return static_cast<uint64_t>(std::llround(std::exp(lg)));
}

} // namespace certify
